use std::io::{Read, Write};

use super::CtmParams;
use crate::corpus::DocKey;
use crate::error::{Error, Result};
use crate::matrix::{format_float, Matrix};
use crate::record_parser::Chamber;

fn topic_ids(k: usize) -> Vec<String> {
    (1..=k).map(|t| t.to_string()).collect()
}

/// Topic-term matrix with one row per topic (ids from 1) and one column per term.
pub fn write_beta_csv<W: Write>(beta: &Matrix, terms: &[String], w: W) -> Result<()> {
    beta.write_csv(w, "topic", &topic_ids(beta.rows()), terms)
}

/// Document-topic shares: `doc_id,chamber,date` followed by one column per topic (ids from 1).
pub fn write_theta_csv<W: Write>(theta: &Matrix, docs: &[DocKey], w: W) -> Result<()> {
    if docs.len() != theta.rows() {
        return Err(Error::invalid("theta rows do not match the document list"));
    }
    let mut w = csv::Writer::from_writer(w);
    let mut header = vec!["doc_id".to_string(), "chamber".into(), "date".into()];
    header.extend(topic_ids(theta.cols()));
    w.write_record(&header)?;
    for (d, (key, row)) in docs.iter().zip(theta.iter_rows()).enumerate() {
        let mut rec = vec![d.to_string(), key.chamber.to_string(), key.date.to_string()];
        rec.extend(row.iter().map(|&x| format_float(x)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("theta", e))?;
    Ok(())
}

pub fn read_theta_csv<R: Read>(r: R) -> Result<(Vec<DocKey>, Matrix)> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() < 4 || &header[0] != "doc_id" || &header[1] != "chamber" || &header[2] != "date" {
        return Err(Error::invalid(
            "theta csv must start with doc_id,chamber,date and list topics",
        ));
    }
    let mut docs = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse {
            source_name: "theta csv".into(),
            line: i + 2,
            message: format!("bad {what}"),
        };
        let chamber: Chamber = rec[1].parse().map_err(|_| bad("chamber"))?;
        let date = rec[2].parse().map_err(|_| bad("date"))?;
        let vals = rec
            .iter()
            .skip(3)
            .map(|s| s.parse::<f64>().map_err(|_| bad("share")))
            .collect::<Result<Vec<_>>>()?;
        docs.push(DocKey::new(chamber, date));
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::invalid("theta csv has no rows"));
    }
    Ok((docs, Matrix::from_rows(rows)?))
}

/// Correlated-topic-model parameters in long form: `block,row,col,value` with
/// blocks `mu` (col 0), `sigma` and `eta`.
pub fn write_ctm_csv<W: Write>(params: &CtmParams, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["block", "row", "col", "value"])?;
    for (i, x) in params.mu.iter().enumerate() {
        w.write_record(["mu", &i.to_string(), "0", &format_float(*x)])?;
    }
    for (name, m) in [("sigma", &params.sigma), ("eta", &params.eta_doc)] {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                w.write_record([name, &i.to_string(), &j.to_string(), &format_float(m.get(i, j))])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("ctm params", e))?;
    Ok(())
}
