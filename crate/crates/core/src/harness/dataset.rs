use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphRecord};

/// One compact JSON object per line, in input order, newline terminated.
pub fn to_jsonl(graphs: &[Graph]) -> Result<String> {
    let mut out = String::new();
    for g in graphs {
        out.push_str(&serde_json::to_string(&g.to_record())?);
        out.push('\n');
    }
    Ok(out)
}

/// Blank lines are skipped; errors name the offending line.
pub fn parse_dataset(text: &str) -> Result<Vec<Graph>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let rec: GraphRecord = serde_json::from_str(line)
                .map_err(|e| Error::Validation(format!("dataset line {}: {e}", i + 1)))?;
            Graph::from_record(rec).map_err(|e| Error::Validation(format!("dataset line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Graph>> {
    parse_dataset(&fs::read_to_string(path)?)
}

pub fn write_dataset(path: impl AsRef<Path>, graphs: &[Graph]) -> Result<()> {
    fs::write(path, to_jsonl(graphs)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let gs = vec![Graph::path("p3", 3), Graph::empty("e", 2), Graph::complete("k4", 4)];
        let text = to_jsonl(&gs).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(parse_dataset(&text).unwrap(), gs);
        assert_eq!(text.lines().next().unwrap(), r#"{"id":"p3","n":3,"edges":[[0,1],[1,2]]}"#);
    }

    #[test]
    fn bad_line_is_reported() {
        let err = parse_dataset("{\"id\":\"a\",\"n\":2,\"edges\":[]}\n{\"id\":\"b\",\"n\":2,\"edges\":[[0,0]]}\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
