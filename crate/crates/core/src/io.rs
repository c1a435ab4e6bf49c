//! Text formats.
//!
//! Counted ranked lists (one distinct ranking per line with its count):
//!
//! ```text
//! # comment
//! 5738;3|1|5|4|2
//! 1203;1|3
//! ```
//!
//! Query lists (one observation per line, universe declared up front):
//!
//! ```text
//! universe=open
//! 12|7|3
//! 7|12
//! ```
//!
//! The counted format may also start with a `universe=` header; without one
//! the universe is `1..=max id`. Blank lines and `#` comments are ignored in
//! both formats, as are blank query lists (an expert that returned nothing).

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::data::{Format, Observation, Provenance, RankingDataset, Universe};
use crate::error::{Error, Result};
use crate::perm::TopTRanking;

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counted" => Ok(Format::Counted),
            "lists" => Ok(Format::Lists),
            other => Err(Error::input(format!(
                "unknown format {other:?} (expected counted or lists)"
            ))),
        }
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Guesses the format from the first data line.
pub fn detect_format(text: &str) -> Result<Format> {
    let mut lines = data_lines(text);
    match lines.next() {
        None => Err(Error::EmptyDataset),
        Some((_, first)) if first.contains(';') => Ok(Format::Counted),
        Some((_, first)) if first.starts_with("universe") => {
            // a header followed by counted lines is still the counted format
            match lines.next() {
                Some((_, second)) if second.contains(';') => Ok(Format::Counted),
                _ => Ok(Format::Lists),
            }
        }
        Some((line, _)) => Err(Error::parse(
            line,
            "cannot tell the format: expected `count;items` or a `universe=` header",
        )),
    }
}

pub fn parse_rankings(text: &str, format: Option<Format>) -> Result<RankingDataset> {
    let format = match format {
        Some(f) => f,
        None => detect_format(text)?,
    };
    match format {
        Format::Counted => parse_counted(text),
        Format::Lists => parse_lists(text),
    }
}

/// Reads a file and records its path as provenance.
pub fn read_rankings(path: &std::path::Path, format: Option<Format>) -> Result<RankingDataset> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
    let mut data = parse_rankings(&text, format)?;
    let format = match format {
        Some(f) => f,
        None => detect_format(&text)?,
    };
    data.provenance = Some(Provenance {
        source: path.display().to_string(),
        format,
    });
    Ok(data)
}

fn parse_universe(line_no: usize, line: &str) -> Result<Option<Universe>> {
    let Some(rest) = line.strip_prefix("universe") else {
        return Ok(None);
    };
    let value = rest
        .trim_start()
        .strip_prefix('=')
        .ok_or_else(|| Error::parse(line_no, "expected `universe=<n|open>`"))?
        .trim();
    if value == "open" {
        return Ok(Some(Universe::Open));
    }
    match value.parse::<u32>() {
        Ok(n) if n > 0 => Ok(Some(Universe::Size(n))),
        _ => Err(Error::parse(line_no, format!("bad universe size {value:?}"))),
    }
}

fn parse_items(line_no: usize, s: &str) -> Result<TopTRanking> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for tok in s.split('|') {
        let tok = tok.trim();
        let id: u32 = tok
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad item id {tok:?}")))?;
        if id == 0 {
            return Err(Error::parse(line_no, "item ids start at 1"));
        }
        if !seen.insert(id) {
            return Err(Error::parse(line_no, format!("item {id} appears twice")));
        }
        items.push(id);
    }
    TopTRanking::new(items).map_err(|e| Error::parse(line_no, e.to_string()))
}

fn finish(universe: Option<Universe>, observations: Vec<Observation>, format: Format) -> Result<RankingDataset> {
    if observations.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let universe = universe.unwrap_or_else(|| {
        let max = observations
            .iter()
            .flat_map(|o| o.ranking.items().iter().copied())
            .max()
            .unwrap_or(1);
        Universe::Size(max)
    });
    let mut data = RankingDataset::new(universe, observations)?;
    data.provenance = Some(Provenance {
        source: String::new(),
        format,
    });
    Ok(data)
}

fn parse_counted(text: &str) -> Result<RankingDataset> {
    let mut universe = None;
    let mut obs = Vec::new();
    for (k, (line_no, line)) in data_lines(text).enumerate() {
        if k == 0 {
            if let Some(u) = parse_universe(line_no, line)? {
                universe = Some(u);
                continue;
            }
        }
        let (count, items) = line
            .split_once(';')
            .ok_or_else(|| Error::parse(line_no, "expected `count;i1|i2|...`"))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad count {:?}", count.trim())))?;
        if count == 0 {
            return Err(Error::parse(line_no, "count must be at least 1"));
        }
        let ranking = parse_items(line_no, items)?;
        check_universe(line_no, universe, &ranking)?;
        obs.push(Observation { ranking, count });
    }
    finish(universe, obs, Format::Counted)
}

fn parse_lists(text: &str) -> Result<RankingDataset> {
    let mut lines = data_lines(text);
    let universe = match lines.next() {
        None => return Err(Error::EmptyDataset),
        Some((line_no, line)) => parse_universe(line_no, line)?
            .ok_or_else(|| Error::parse(line_no, "query lists start with a `universe=` header"))?,
    };
    let mut obs = Vec::new();
    for (line_no, line) in lines {
        let ranking = parse_items(line_no, line)?;
        check_universe(line_no, Some(universe), &ranking)?;
        obs.push(Observation { ranking, count: 1 });
    }
    finish(Some(universe), obs, Format::Lists)
}

fn check_universe(line_no: usize, universe: Option<Universe>, r: &TopTRanking) -> Result<()> {
    if let Some(Universe::Size(n)) = universe {
        if let Some(bad) = r.items().iter().find(|&&it| it > n) {
            return Err(Error::parse(line_no, format!("item {bad} outside universe 1..={n}")));
        }
    }
    Ok(())
}

pub fn format_items(items: &[u32]) -> String {
    let mut s = String::new();
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            s.push('|');
        }
        let _ = write!(s, "{it}");
    }
    s
}

fn universe_header(u: Universe) -> String {
    match u {
        Universe::Size(n) => format!("universe={n}"),
        Universe::Open => "universe=open".to_string(),
    }
}

/// Serializes a dataset; observation order and counts are preserved. The
/// lists format repeats a line `count` times.
pub fn write_rankings(data: &RankingDataset, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Counted => {
            out.push_str(&universe_header(data.universe()));
            out.push('\n');
            for o in data.observations() {
                let _ = writeln!(out, "{};{}", o.count, format_items(o.ranking.items()));
            }
        }
        Format::Lists => {
            out.push_str(&universe_header(data.universe()));
            out.push('\n');
            for o in data.observations() {
                let line = format_items(o.ranking.items());
                for _ in 0..o.count {
                    out.push_str(&line);
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Flat `key=value` configuration, later keys overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues(pub BTreeMap<String, String>);

impl KeyValues {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

pub fn parse_key_values(text: &str) -> Result<KeyValues> {
    let mut map = BTreeMap::new();
    for (line_no, line) in data_lines(text) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, "expected `key=value`"))?;
        let k = k.trim();
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::parse(line_no, format!("bad key {k:?}")));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(KeyValues(map))
}

/// Optional sidecar mapping item ids to display names: `id<TAB>name` lines.
pub fn parse_names(text: &str) -> Result<BTreeMap<u32, String>> {
    let mut names = BTreeMap::new();
    for (line_no, line) in data_lines(text) {
        let (id, name) = line
            .split_once(['\t', ' '])
            .ok_or_else(|| Error::parse(line_no, "expected `id<TAB>name`"))?;
        let id: u32 = id
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad item id {id:?}")))?;
        if id == 0 {
            return Err(Error::parse(line_no, "item ids start at 1"));
        }
        if names.insert(id, name.trim().to_string()).is_some() {
            return Err(Error::parse(line_no, format!("item {id} named twice")));
        }
    }
    Ok(names)
}

/// `start:stop:step` grid, inclusive of `stop` up to rounding.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(format!("bad number {p:?} in grid {spec:?}")))
        })
        .collect::<Result<_>>()?;
    let [start, stop, step] = nums[..] else {
        return Err(Error::input(format!("grid {spec:?} must be start:stop:step")));
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::input(format!("grid {spec:?} needs start <= stop and step > 0")));
    }
    let intervals = ((stop - start) / step + 1e-9).floor();
    if !intervals.is_finite() || intervals >= 1_000_000.0 {
        return Err(Error::input("grid has more than a million points"));
    }
    let count = intervals as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

/// Comma-separated list of positive reals.
pub fn parse_reals(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(format!("bad number {p:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counted_line() {
        let d = parse_rankings("5738;3|1|5|4|2\n", None).unwrap();
        assert_eq!(d.observations().len(), 1);
        assert_eq!(d.observations()[0].count, 5738);
        assert_eq!(d.t_max(), 5);
        assert_eq!(d.universe(), Universe::Size(5));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert_eq!(parse_rankings("", None).unwrap_err(), Error::EmptyDataset);
        assert_eq!(
            parse_rankings("# only a comment\n\n", None).unwrap_err(),
            Error::EmptyDataset
        );
        assert_eq!(
            parse_rankings("universe=open\n", Some(Format::Lists)).unwrap_err(),
            Error::EmptyDataset
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_rankings("1;1|2\n\n2;3|3\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse_rankings("0;1|2\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e:?}");
        let e = parse_rankings("universe=3\n1;1|4\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        let e = parse_rankings("1|2\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e:?}");
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn query_lists() {
        let text = "universe=open\n# expert 1\n12|7|3\n\n7|12\n";
        let d = parse_rankings(text, None).unwrap();
        assert_eq!(d.universe(), Universe::Open);
        assert_eq!(d.total_count(), 2);
        assert_eq!(d.items(), vec![3, 7, 12]);
        assert!(parse_rankings("12|7\n", Some(Format::Lists)).is_err());
    }

    #[test]
    fn write_then_parse_preserves_data() {
        let text = "universe=5\n5738;3|1|5|4|2\n12;1|3\n";
        let d = parse_rankings(text, None).unwrap();
        let again = parse_rankings(&write_rankings(&d, Format::Counted), None).unwrap();
        assert_eq!(again.observations(), d.observations());
        assert_eq!(write_rankings(&d, Format::Counted), text);
    }

    #[test]
    fn key_values_and_names() {
        let kv = parse_key_values("seed = 7\n# c\nlambda=0.5\nseed=9\n").unwrap();
        assert_eq!(kv.get("seed"), Some("9"));
        assert_eq!(kv.get("lambda"), Some("0.5"));
        assert!(parse_key_values("novalue\n").is_err());

        let names = parse_names("1\thttp://a.edu/\n2 b\n").unwrap();
        assert_eq!(names[&1], "http://a.edu/");
        assert_eq!(names[&2], "b");
        assert!(parse_names("1\ta\n1\tb\n").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0:5:0.1").unwrap();
        assert_eq!(g.len(), 51);
        assert!((g[50] - 5.0).abs() < 1e-9);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("1e30:9e30:1e-300").is_err());
        assert!(parse_grid("-1e308:1e308:1").is_err());
        assert_eq!(parse_reals("1, 0.5").unwrap(), vec![1.0, 0.5]);
    }
}
