//! Run the data roster on a CSV of p-values.
//!
//! `cargo run --example analyze_dataset -- path/to/file.csv [column]`
//! Without arguments a small built-in table is used.

use std::io::Write;

use bfdr::dataio::{load_pvalues, DatasetDescriptor};
use bfdr::report::{analyze, data_roster};
use bfdr::Family;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let _guard;
    let path = match args.next() {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let mut f = tempfile::NamedTempFile::new()?;
            writeln!(f, "study,p")?;
            for (i, p) in [0.0001, 0.0008, 0.003, 0.012, 0.021, 0.04, 0.2, 0.45, 0.61, 0.93].iter().enumerate() {
                writeln!(f, "s{i},{p}")?;
            }
            let path = f.path().to_path_buf();
            _guard = f;
            path
        }
    };
    let column = args.next().unwrap_or_else(|| "p".into());
    let mut desc = DatasetDescriptor::new(path, column);
    if desc.column == "p" {
        desc.id_column = Some("study".into());
    }
    let sample = load_pvalues(&desc)?;
    let analysis = analyze(&sample, &data_roster(Family::Sl, 0.1), &[0.1, 0.2])?;
    for r in &analysis.rejections {
        println!(
            "{:<12} q = {}: r = {:>2}, pi0_hat = {:.2}, boundary {:?}",
            r.procedure,
            r.q,
            r.r,
            r.pi0_hat.unwrap_or(1.0),
            r.boundary_label
        );
    }
    Ok(())
}
