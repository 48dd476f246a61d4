use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use tailci::TailSample;

/// Reads one number per line from a plain or gzip file (`-` is stdin).
/// Blank lines and `#` comments are skipped.
pub fn read_sample(path: &Path, abs: bool) -> Result<TailSample, String> {
    let raw: Box<dyn Read> = if path.as_os_str() == "-" {
        Box::new(io::stdin())
    } else {
        Box::new(File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?)
    };
    let mut reader = BufReader::new(raw);
    let gz = reader
        .fill_buf()
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?
        .starts_with(&[0x1f, 0x8b]);
    let reader: Box<dyn BufRead> = if gz { Box::new(BufReader::new(MultiGzDecoder::new(reader))) } else { Box::new(reader) };
    parse_lines(reader, abs).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_lines(reader: impl BufRead, abs: bool) -> Result<TailSample, String> {
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| format!("read error: {e}"))?;
        let token = line.split('#').next().unwrap_or("").trim();
        if token.is_empty() {
            continue;
        }
        let v: f64 = token
            .parse()
            .map_err(|_| format!("line {}: not a number: `{token}`", idx + 1))?;
        let v = if abs { v.abs() } else { v };
        if !(v > 0.0 && v.is_finite()) {
            let hint = if abs { "" } else { " (use --abs to take absolute values)" };
            return Err(format!("line {}: observations must be positive and finite, got {v}{hint}", idx + 1));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err("no observations".into());
    }
    TailSample::new(values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_blanks_and_comments() {
        let s = parse_lines("# header\n3\n\n1.5 # note\n2\n".as_bytes(), false).unwrap();
        assert_eq!(s.values(), &[1.5, 2.0, 3.0]);
    }

    #[test]
    fn nonpositive_rejected_unless_abs() {
        let err = parse_lines("1\n-2\n".as_bytes(), false).unwrap_err();
        assert!(err.contains("line 2") && err.contains("--abs"), "{err}");
        let s = parse_lines("1\n-2\n".as_bytes(), true).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
        assert!(parse_lines("0\n".as_bytes(), true).is_err());
    }

    #[test]
    fn empty_and_garbage_fail() {
        assert!(parse_lines("\n# only comments\n".as_bytes(), false).is_err());
        assert!(parse_lines("1\nabc\n".as_bytes(), false).unwrap_err().contains("line 2"));
    }
}
