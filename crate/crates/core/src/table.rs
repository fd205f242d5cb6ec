//! In-memory CSV rendering shared by the artifact writers.

pub(crate) fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Two-decimal display used by the Markdown renderings; `NA` for absent values.
pub(crate) fn fmt2(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.2}"),
        None => "NA".to_owned(),
    }
}

pub(crate) fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NA".to_owned(),
    }
}
