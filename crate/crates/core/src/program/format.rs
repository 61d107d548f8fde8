use serde::{Deserialize, Serialize};

use super::block::read_block;
use super::building::read_building;
use super::{Diagnostic, IssueClass, ProgramError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgramKind {
    Block,
    Building,
}

impl std::str::FromStr for ProgramKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "block" => Ok(ProgramKind::Block),
            "building" => Ok(ProgramKind::Building),
            other => Err(format!("unknown program kind `{other}` (expected block|building)")),
        }
    }
}

/// Format Accuracy observations for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatVerdict {
    pub json_parsable: bool,
    pub geometry_valid: bool,
    pub fields_complete: bool,
    pub overall: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl FormatVerdict {
    fn from_issues(errors: &[ProgramError], notes: Vec<Diagnostic>) -> Self {
        let has = |class: IssueClass| errors.iter().any(|e| e.class() == class);
        let json_parsable = !has(IssueClass::Json);
        // Nothing past the parser is observable when the document is not JSON
        // or has no recognizable shape.
        let opaque = !json_parsable || errors.iter().any(|e| matches!(e, ProgramError::UnknownForm));
        let geometry_valid = !opaque && !has(IssueClass::Geometry);
        let fields_complete = !opaque && !has(IssueClass::Fields);
        let mut diagnostics: Vec<Diagnostic> = errors.iter().map(Diagnostic::from_error).collect();
        diagnostics.extend(notes);
        FormatVerdict {
            json_parsable,
            geometry_valid,
            fields_complete,
            overall: json_parsable && geometry_valid && fields_complete,
            diagnostics,
        }
    }
}

/// Never fails: every problem is reported inside the verdict.
pub fn check_format(text: &[u8], kind: ProgramKind) -> FormatVerdict {
    match kind {
        ProgramKind::Block => {
            let r = read_block(text);
            FormatVerdict::from_issues(&r.errors, r.notes)
        }
        ProgramKind::Building => {
            let r = read_building(text);
            FormatVerdict::from_issues(&r.errors, r.notes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_block_program;

    const VALID: &[u8] = br#"[{"id": "mixed_1", "type": "mixed-use building",
        "polygon": [[0, 0], [22, 0], [22, 22], [0, 22]], "floor_count": 12, "facade": "glass"}]"#;
    const BOWTIE: &[u8] = br#"[{"id": "b", "type": "office", "polygon": [[0,0],[10,10],[10,0],[0,10]]}]"#;

    fn triple(v: &FormatVerdict) -> (bool, bool, bool) {
        (v.json_parsable, v.geometry_valid, v.fields_complete)
    }

    #[test]
    fn block_verdicts() {
        assert_eq!(triple(&check_format(VALID, ProgramKind::Block)), (true, true, true));
        assert_eq!(triple(&check_format(&[0xff, 0x00, 0x13], ProgramKind::Block)), (false, false, false));
        let v = check_format(BOWTIE, ProgramKind::Block);
        assert_eq!(triple(&v), (true, false, true));
        assert!(!v.overall);
        // The parser reports the same defect.
        assert!(matches!(parse_block_program(BOWTIE), Err(ProgramError::BadPolygon { .. })));
    }

    #[test]
    fn independent_observations() {
        let both = br#"[{"id": "b", "polygon": [[0,0],[10,10],[10,0],[0,10]]}]"#;
        assert_eq!(triple(&check_format(both, ProgramKind::Block)), (true, false, false));
        let fields = br#"[{"id": "b", "polygon": [[0,0],[10,0],[0,10]]}]"#;
        assert_eq!(triple(&check_format(fields, ProgramKind::Block)), (true, true, false));
        assert_eq!(triple(&check_format(b"\"text\"", ProgramKind::Block)), (true, false, false));
    }

    #[test]
    fn building_verdicts() {
        let ok = br#"{"window": "glass", "door": "oak", "roof": "flat"}"#;
        assert!(check_format(ok, ProgramKind::Building).overall);
        let empty = br#"{"window": ""}"#;
        assert_eq!(triple(&check_format(empty, ProgramKind::Building)), (true, true, false));
        assert_eq!(triple(&check_format(b"", ProgramKind::Building)), (false, false, false));
    }
}
