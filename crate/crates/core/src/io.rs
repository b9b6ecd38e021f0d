//! File formats: JSON model specs and CSV response/ability tables.
//!
//! A model spec looks like
//!
//! ```json
//! {"family": "pcm", "link": "logistic",
//!  "items": [{"id": "i1", "deltas": [-0.5, 0.8]}]}
//! ```
//!
//! Response tables have a `person_id` column followed by one column per item;
//! cells are non-negative integers or `NA`.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{Dataset, ItemSpec};
use crate::model::{Family, ItemThresholds, OrdinalModel};
use crate::response::ResponseFunction;

/// Significant digits used for every printed probability or parameter.
pub const PRINT_DIGITS: usize = 12;

/// `x` with [`PRINT_DIGITS`] significant digits, trailing zeros trimmed.
/// Plain notation for `1e-5 <= |x| < 1e12`, scientific otherwise.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", PRINT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..PRINT_DIGITS as i32).contains(&exp) {
        let decimals = (PRINT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `x` rounded to what [`format_sig`] prints.
pub fn round_sig(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemEntry {
    pub id: String,
    pub deltas: Vec<f64>,
}

/// The JSON document as written. [`ModelSpecFile::models`] validates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecFile {
    pub family: String,
    pub link: String,
    pub items: Vec<ItemEntry>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

impl ModelSpecFile {
    /// Parses without semantic checks; syntax and shape errors carry a position.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn from_models(models: &[OrdinalModel]) -> Result<Self> {
        let first = models.first().ok_or_else(|| Error::invalid("no items"))?;
        if models.iter().any(|m| m.family() != first.family() || m.response() != first.response()) {
            return Err(Error::invalid("all items of a spec share one family and link"));
        }
        Ok(Self {
            family: first.family().name().into(),
            link: first.response().name().into(),
            items: models
                .iter()
                .map(|m| ItemEntry { id: m.thresholds().item_id.clone(), deltas: m.deltas().to_vec() })
                .collect(),
        })
    }

    pub fn family(&self) -> Result<Family> {
        Family::from_name(&self.family)
    }

    /// Checks family, link, ids and thresholds and builds one model per item.
    pub fn models(&self) -> Result<Vec<OrdinalModel>> {
        let family = self.family()?;
        if self.link != "logistic" {
            return Err(Error::invalid(format!("unsupported link '{}' (expected logistic)", self.link)));
        }
        if self.items.is_empty() {
            return Err(Error::invalid("model spec has no items"));
        }
        let mut seen = HashSet::new();
        self.items
            .iter()
            .map(|it| {
                if !seen.insert(it.id.as_str()) {
                    return Err(Error::invalid(format!("duplicate item id '{}'", it.id)));
                }
                let th = ItemThresholds::new(it.id.clone(), it.deltas.clone())
                    .map_err(|e| Error::invalid(format!("item '{}': {e}", it.id)))?;
                OrdinalModel::new(family, ResponseFunction::Logistic, th)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Parses and validates a model spec in one step.
pub fn read_model_spec(text: &str) -> Result<Vec<OrdinalModel>> {
    ModelSpecFile::parse(text)?.models()
}

/// A response table as read, before the item category counts are known.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable {
    pub person_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub cells: Vec<Vec<Option<usize>>>,
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("row has {len} fields, header has {expected_len}")
        }
        _ => e.to_string(),
    };
    Error::Parse { line, column: 0, message }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input)
}

fn header<R: Read>(rdr: &mut csv::Reader<R>, first: &str) -> Result<Vec<String>> {
    let h = rdr.headers().map_err(csv_error)?.clone();
    if h.get(0) != Some(first) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("first header must be '{first}', found '{}'", h.get(0).unwrap_or("")),
        });
    }
    Ok(h.iter().map(str::to_string).collect())
}

impl ResponseTable {
    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut rdr = reader(input);
        let header = header(&mut rdr, "person_id")?;
        let item_ids: Vec<String> = header[1..].to_vec();
        if item_ids.is_empty() {
            return Err(Error::Parse { line: 1, column: 2, message: "no item columns".into() });
        }
        let mut seen = HashSet::new();
        for (c, id) in item_ids.iter().enumerate() {
            if id.is_empty() || !seen.insert(id) {
                return Err(Error::Parse { line: 1, column: c + 2, message: format!("empty or duplicate item id '{id}'") });
            }
        }
        let mut person_ids = Vec::new();
        let mut cells = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            person_ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .enumerate()
                .map(|(c, v)| match v {
                    "NA" => Ok(None),
                    v => v.parse::<usize>().map(Some).map_err(|_| Error::Parse {
                        line,
                        column: c + 2,
                        message: format!("expected a non-negative integer or NA, found '{v}'"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            cells.push(row);
        }
        Ok(Self { person_ids, item_ids, cells })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    /// Largest observed category per item (0 for all-missing columns).
    pub fn observed_max(&self) -> Vec<usize> {
        (0..self.item_ids.len())
            .map(|i| self.cells.iter().filter_map(|row| row[i]).max().unwrap_or(0))
            .collect()
    }

    /// A dataset with the given number of thresholds per item, in column order.
    pub fn to_dataset(&self, ks: &[usize]) -> Result<Dataset> {
        if ks.len() != self.item_ids.len() {
            return Err(Error::invalid(format!("{} item sizes for {} columns", ks.len(), self.item_ids.len())));
        }
        let items = self.item_ids.iter().zip(ks).map(|(id, &k)| ItemSpec { id: id.clone(), k }).collect();
        Dataset::new(self.person_ids.clone(), items, self.cells.clone())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(std::iter::once("person_id").chain(self.item_ids.iter().map(String::as_str)))
            .map_err(io)?;
        for (pid, row) in self.person_ids.iter().zip(&self.cells) {
            let fields: Vec<String> = row.iter().map(|c| c.map_or("NA".into(), |y| y.to_string())).collect();
            w.write_record(std::iter::once(pid.as_str()).chain(fields.iter().map(String::as_str)))
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Reads `person_id,theta` rows.
pub fn read_abilities<R: Read>(input: R) -> Result<Vec<(String, f64)>> {
    let mut rdr = reader(input);
    let h = header(&mut rdr, "person_id")?;
    if h.len() != 2 || h[1] != "theta" {
        return Err(Error::Parse { line: 1, column: 2, message: "expected header 'person_id,theta'".into() });
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let theta: f64 = rec[1].parse().map_err(|_| Error::Parse {
                line,
                column: 2,
                message: format!("expected a number, found '{}'", &rec[1]),
            })?;
            if !theta.is_finite() {
                return Err(Error::invalid(format!("line {line}: ability {theta} is not finite")));
            }
            Ok((rec[0].to_string(), theta))
        })
        .collect()
}

pub fn write_abilities<W: Write>(out: W, rows: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["person_id", "theta"]).map_err(io)?;
    for (pid, theta) in rows {
        w.write_record([pid.as_str(), &format_sig(*theta)]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Abilities in the order of `person_ids`, matched by id.
pub fn align_abilities(person_ids: &[String], rows: &[(String, f64)]) -> Result<Vec<f64>> {
    let map: std::collections::HashMap<&str, f64> = rows.iter().map(|(p, t)| (p.as_str(), *t)).collect();
    if map.len() != rows.len() {
        return Err(Error::invalid("duplicate person id in abilities"));
    }
    person_ids
        .iter()
        .map(|p| map.get(p.as_str()).copied().ok_or_else(|| Error::invalid(format!("no ability for person '{p}'"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(0.25), "0.25");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_sig(123.456), "123.456");
        assert_eq!(format_sig(1e-7 / 3.0), "3.33333333333e-8");
        assert_eq!(format_sig(0.99999999999999), "1");
        assert_eq!(format_sig(-2.5e15), "-2.5e15");
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
    }

    #[test]
    fn model_spec_validation() {
        let ok = r#"{"family":"pcm","link":"logistic","items":[{"id":"a","deltas":[1,-1]}]}"#;
        assert_eq!(read_model_spec(ok).unwrap()[0].deltas(), &[1.0, -1.0]);
        let bad_order = r#"{"family":"cumulative","link":"logistic","items":[{"id":"a","deltas":[1,-1]}]}"#;
        let e = read_model_spec(bad_order).unwrap_err();
        assert!(e.to_string().contains("threshold order violated"), "{e}");
        for bad in [
            r#"{"family":"graded","link":"logistic","items":[{"id":"a","deltas":[0]}]}"#,
            r#"{"family":"pcm","link":"probit","items":[{"id":"a","deltas":[0]}]}"#,
            r#"{"family":"pcm","link":"logistic","items":[{"id":"a","deltas":[]}]}"#,
            r#"{"family":"pcm","link":"logistic","items":[]}"#,
            r#"{"family":"pcm","link":"logistic","items":[{"id":"a","deltas":[0]},{"id":"a","deltas":[0]}]}"#,
        ] {
            assert!(matches!(read_model_spec(bad), Err(Error::InvalidInput(_))), "{bad}");
        }
        let syntax = "{\n  \"family\": \"pcm\",\n  \"link\" \"logistic\"\n}";
        assert!(matches!(read_model_spec(syntax), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn spec_round_trip() {
        let models = read_model_spec(r#"{"family":"sequential","link":"logistic","items":[{"id":"x","deltas":[0.5]}]}"#).unwrap();
        let spec = ModelSpecFile::from_models(&models).unwrap();
        assert_eq!(read_model_spec(&spec.to_json()).unwrap(), models);
    }

    #[test]
    fn response_table_round_trip() {
        let text = "person_id,i1,i2\np1,0,2\np2,NA,1\n";
        let t = ResponseTable::parse(text).unwrap();
        assert_eq!(t.cells, vec![vec![Some(0), Some(2)], vec![None, Some(1)]]);
        assert_eq!(t.observed_max(), vec![0, 2]);
        assert_eq!(t.to_csv_string().unwrap(), text);
        assert!(t.to_dataset(&[1, 1]).is_err());
        assert_eq!(t.to_dataset(&[1, 2]).unwrap().n_persons(), 2);
    }

    #[test]
    fn response_table_errors_carry_positions() {
        let e = ResponseTable::parse("person_id,i1\np1,0\np2,x\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, column: 2, .. }), "{e:?}");
        let e = ResponseTable::parse("person_id,i1\np1,0,1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        assert!(ResponseTable::parse("id,i1\np1,0\n").is_err());
        assert!(ResponseTable::parse("person_id,i1,i1\np1,0,0\n").is_err());
        assert!(ResponseTable::parse("person_id,i1\np1,-1\n").is_err());
    }

    #[test]
    fn abilities_round_trip() {
        let rows = vec![("a".to_string(), 0.25), ("b".to_string(), -1.0 / 3.0)];
        let mut buf = Vec::new();
        write_abilities(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "person_id,theta\na,0.25\nb,-0.333333333333\n");
        let back = read_abilities(buf.as_slice()).unwrap();
        let ids = vec!["b".to_string(), "a".to_string()];
        assert_eq!(align_abilities(&ids, &back).unwrap(), vec![-0.333333333333, 0.25]);
        assert!(align_abilities(&["c".to_string()], &back).is_err());
    }
}
