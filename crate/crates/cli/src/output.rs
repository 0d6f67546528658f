use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use hitting_core::grid::format_number;
use hitting_core::GridField;

use crate::error::CliError;

/// Buffered CSV writer; every number goes through `format_number`.
pub struct Csv {
    w: BufWriter<File>,
}

impl Csv {
    pub fn create(path: &Path, header: &str) -> Result<Self, CliError> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{header}")?;
        Ok(Self { w })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        let line: Vec<String> = values.iter().map(|&v| format_number(v)).collect();
        writeln!(self.w, "{}", line.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_field(path: &Path, field: &GridField) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    field.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField, CliError> {
    let file = File::open(path).map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(GridField::read_csv(std::io::BufReader::new(file))?)
}
