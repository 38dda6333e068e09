use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::failure::{Failure, Outcome};

pub type CsvOut = csv::Writer<Box<dyn Write>>;

/// Refuses to proceed if any target exists and `force` is off. Checked
/// before anything is written so a refused run leaves no partial output.
pub fn check_targets(paths: &[PathBuf], force: bool) -> Outcome<()> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(Failure::other(format!(
            "{} already exists (use --force to overwrite)",
            p.display()
        ))),
        None => Ok(()),
    }
}

fn open_file(path: &Path, force: bool) -> Outcome<File> {
    let mut opts = OpenOptions::new();
    opts.write(true);
    if force {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    opts.open(path).map_err(|e| match e.kind() {
        io::ErrorKind::AlreadyExists => Failure::other(format!(
            "{} already exists (use --force to overwrite)",
            path.display()
        )),
        _ => Failure::other(format!("{}: {e}", path.display())),
    })
}

/// CSV writer on `path`, or on stdout when no path is given.
pub fn csv_writer(path: Option<&Path>, force: bool) -> Outcome<CsvOut> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(open_file(p, force)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    Ok(csv::WriterBuilder::new().from_writer(sink))
}

pub fn prepare_dir(dir: &Path) -> Outcome<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::other(format!("{}: {e}", dir.display())))
}

pub fn write_row<I, S>(w: &mut CsvOut, fields: I) -> Outcome<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).map_err(Failure::other)
}

pub fn finish(mut w: CsvOut) -> Outcome<()> {
    w.flush().map_err(Failure::other)
}

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    x.to_string()
}
