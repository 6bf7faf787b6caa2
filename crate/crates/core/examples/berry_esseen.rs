//! The rate experiment: distances from n-fold free convolutions to the
//! semicircle and their log-log slopes.

use freestein::experiment::{self, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("freestein-berry-esseen");
    std::fs::create_dir_all(&dir)?;
    let bases = [
        ("bernoulli", r#"{"kind": "atomic", "atoms": [[1, 0.5], [-1, 0.5]]}"#),
        ("two_atom", r#"{"kind": "atomic", "atoms": [[2, 0.2], [-0.5, 0.8]]}"#),
    ];
    for (name, base) in bases {
        let out = dir.join(format!("{name}.csv"));
        let _ = std::fs::remove_file(&out);
        let text =
            format!(r#"{{"base_measure": {base}, "n_values": [8, 16, 32, 64, 128, 256, 512], "output": {out:?}}}"#);
        let cfg = ExperimentConfig::from_json(&text, None)?;
        let summary = experiment::berry_esseen(&cfg)?;
        println!("{name}: rows in {}", out.display());
        for row in experiment::read_rows(&out)? {
            println!(
                "  n = {:>3}  kol {:.3e}  tv {}  w1 {:.3e}",
                row.n,
                row.d_kol.unwrap_or(f64::NAN),
                row.d_tv.map_or("refused".into(), |t| format!("{t:.3e}")),
                row.d_w1.unwrap_or(f64::NAN)
            );
        }
        for fit in &summary.fits {
            println!("  {}", serde_json::to_string(fit)?);
        }
        println!("  superconvergence from n = {:?}", summary.superconvergence.smallest_n);
    }
    Ok(())
}
