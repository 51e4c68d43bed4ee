//! Failure classification onto process exit codes:
//! 1 numerical, 2 usage, 3 I/O.

use std::path::Path;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

pub fn io_failure(path: &Path, err: &dyn std::fmt::Display) -> Failure {
    Failure::io(format!("{}: {err}", path.display()))
}

fn code_of(err: &fns_core::Error) -> i32 {
    use fns_core::Error::*;
    match err {
        PicardDiverged { .. }
        | EnergyIncrease { .. }
        | UniformFloorViolated { .. }
        | NonPositiveError { .. } => 1,
        Sweep { source, .. } => code_of(source),
        InvalidParameter { .. } | GridMismatch(_) | DivergentNorm { .. } => 2,
        SnapshotFormat(_) | Io { .. } => 3,
    }
}

impl From<fns_core::Error> for Failure {
    fn from(err: fns_core::Error) -> Failure {
        Failure { code: code_of(&err), message: err.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fns_core::Error;

    #[test]
    fn exit_codes_follow_error_class() {
        let numerical = Error::PicardDiverged { residual: 1.0, iters: 50 };
        assert_eq!(Failure::from(numerical).code, 1);
        let usage = Error::GridMismatch("x".into());
        assert_eq!(Failure::from(usage).code, 2);
        let io = Error::SnapshotFormat("bad magic".into());
        assert_eq!(Failure::from(io).code, 3);
        let wrapped = Error::Sweep {
            alpha: 1.9,
            source: Box::new(Error::EnergyIncrease { t: 0.1, before: 1.0, after: 2.0 }),
        };
        let f = Failure::from(wrapped);
        assert_eq!(f.code, 1, "sweep failures classify by their cause");
        assert!(f.message.contains("1.9"), "failing exponent must be named: {}", f.message);
    }
}
