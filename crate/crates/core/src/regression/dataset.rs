use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mdp::Obs;
use crate::regression::truth::LabelTruth;

#[derive(Clone, Debug, Default)]
pub struct OneContextDataset {
    pub samples: Vec<(Obs, bool)>,
    pub truth: Option<LabelTruth>,
}

#[derive(Clone, Debug, Default)]
pub struct TwoContextDataset {
    pub samples: Vec<(Obs, Obs, bool)>,
    pub truth: Option<LabelTruth>,
}

impl OneContextDataset {
    pub fn new(samples: Vec<(Obs, bool)>) -> Self {
        Self { samples, truth: None }
    }
    pub fn with_truth(mut self, truth: LabelTruth) -> Self {
        self.truth = Some(truth);
        self
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("one-context {}\n", self.samples.len());
        for &(x, y) in &self.samples {
            let _ = writeln!(out, "{x} {}", y as u8);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows = parse_rows(text, "one-context", 2)?;
        Ok(Self::new(rows.into_iter().map(|r| (r[0], r[1] == 1)).collect()))
    }
}

impl TwoContextDataset {
    pub fn new(samples: Vec<(Obs, Obs, bool)>) -> Self {
        Self { samples, truth: None }
    }
    pub fn with_truth(mut self, truth: LabelTruth) -> Self {
        self.truth = Some(truth);
        self
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("two-context {}\n", self.samples.len());
        for &(x1, x2, y) in &self.samples {
            let _ = writeln!(out, "{x1} {x2} {}", y as u8);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows = parse_rows(text, "two-context", 3)?;
        Ok(Self::new(rows.into_iter().map(|r| (r[0], r[1], r[2] == 1)).collect()))
    }
}

fn parse_rows(text: &str, kind: &str, width: usize) -> Result<Vec<Vec<usize>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::EmptyDataset)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(kind) {
        return Err(Error::Format(format!("expected header `{kind} <count>`, found `{header}`")));
    }
    let count: usize = parts
        .next()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::Format(format!("missing sample count in `{header}`")))?;
    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let row: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))?;
        if row.len() != width || row[width - 1] > 1 {
            return Err(Error::Format(format!("line {}: expected {width} fields with a 0/1 label", i + 2)));
        }
        rows.push(row);
    }
    if rows.len() != count {
        return Err(Error::Format(format!("header announces {count} samples, found {}", rows.len())));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let d = TwoContextDataset::new(vec![(0, 3, true), (2, 1, false)]);
        let back = TwoContextDataset::from_text(&d.to_text()).unwrap();
        assert_eq!(back.samples, d.samples);
        let e = OneContextDataset::new(vec![(4, false)]);
        assert_eq!(OneContextDataset::from_text(&e.to_text()).unwrap().samples, e.samples);
    }

    #[test]
    fn rejects_bad_labels_and_counts() {
        assert!(OneContextDataset::from_text("one-context 1\n3 2\n").is_err());
        assert!(OneContextDataset::from_text("one-context 2\n3 1\n").is_err());
        assert!(OneContextDataset::from_text("").is_err());
    }
}
