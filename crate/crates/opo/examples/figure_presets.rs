//! Write the fixed local oscillator preset tables as CSV.

use opo::analytics::FixedLoForm;
use opo::harness::output::write_csv;
use opo::harness::{preset, Preset};

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("opo-example-presets");
    std::fs::create_dir_all(&dir)?;
    for (name, p) in [("fig2", Preset::Fig2), ("fig2-inset", Preset::Fig2Inset), ("fig3a", Preset::Fig3a), ("fig3b", Preset::Fig3b)] {
        let t = preset(p, FixedLoForm::Consistent)?;
        let path = dir.join(format!("{name}.csv"));
        let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
        write_csv(&path, &cols, &t.rows)?;
        println!("{name}: {} rows x {:?} -> {}", t.rows.len(), t.columns, path.display());
    }
    Ok(())
}
