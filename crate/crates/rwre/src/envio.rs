//! Environment files.
//!
//! Binary layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `RWREENV\0` |
//! | 4 | layout version (`u32`, currently 1) |
//! | 4 | header length `h` (`u32`) |
//! | `h` | header, UTF-8 JSON (see [`Header`]) |
//! | 8 | `N` (`u64`) |
//! | `8 N` | `lambda_0 .. lambda_{N-1}` as `f64` |
//! | `ceil(N/8)` | `chi`, bit `j` at byte `j/8`, position `j%8` (LSB first) |
//!
//! CSV: the header comment line, then `j,chi,lambda` rows. `lambda` is
//! written in shortest round-trip form, so CSV files reproduce the
//! environment exactly.

use std::io::Write;

use anyhow::{bail, ensure, Context};

use rwre_core::env::{Bits, Environment};

use crate::config::{Header, RunConfig};

pub const MAGIC: &[u8; 8] = b"RWREENV\0";
const LAYOUT_VERSION: u32 = 1;

fn spec_of(header: &Header) -> anyhow::Result<rwre_core::env::EnvironmentSpec> {
    match &header.config {
        RunConfig::GenEnv { spec, .. } => Ok(*spec),
        other => bail!("environment file written by `{}`, expected `gen-env`", other.name()),
    }
}

pub fn write_env_bin(w: &mut impl Write, env: &Environment, header: &Header) -> std::io::Result<()> {
    let h = serde_json::to_vec(header).expect("headers serialise");
    w.write_all(MAGIC)?;
    w.write_all(&LAYOUT_VERSION.to_le_bytes())?;
    w.write_all(&(h.len() as u32).to_le_bytes())?;
    w.write_all(&h)?;
    w.write_all(&(env.len() as u64).to_le_bytes())?;
    for l in env.lambda() {
        w.write_all(&l.to_le_bytes())?;
    }
    w.write_all(&env.chi().to_bytes())
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> anyhow::Result<&'a [u8]> {
        ensure!(self.0.len() >= n, "truncated environment file");
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }

    fn u32(&mut self) -> anyhow::Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> anyhow::Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_env_bin(bytes: &[u8]) -> anyhow::Result<(Header, Environment)> {
    let mut c = Cursor(bytes);
    ensure!(c.take(8)? == MAGIC, "not a binary environment file");
    let version = c.u32()?;
    ensure!(version == LAYOUT_VERSION, "unsupported environment layout version {version}");
    let hlen = c.u32()? as usize;
    let header: Header = serde_json::from_slice(c.take(hlen)?).context("environment header")?;
    let n = usize::try_from(c.u64()?)?;
    let lambda = c
        .take(n.checked_mul(8).context("length overflow")?)?
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let chi = Bits::from_bytes(c.take(n.div_ceil(8))?, n)?;
    ensure!(c.0.is_empty(), "trailing bytes after environment");
    let env = Environment::from_parts(spec_of(&header)?, lambda, chi)?;
    Ok((header, env))
}

pub fn write_env_csv(w: &mut impl Write, env: &Environment, header: &Header) -> std::io::Result<()> {
    w.write_all(header.csv_line().as_bytes())?;
    writeln!(w, "j,chi,lambda")?;
    for (j, l) in env.lambda().iter().enumerate() {
        writeln!(w, "{j},{},{l:?}", env.chi().get(j) as u8)?;
    }
    Ok(())
}

pub fn read_env_csv(text: &str) -> anyhow::Result<(Header, Environment)> {
    let header = Header::from_csv(text)?.context("environment CSV lacks its header line")?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    ensure!(rdr.headers()?.iter().eq(["j", "chi", "lambda"]), "expected columns j,chi,lambda");
    let mut lambda = Vec::new();
    let mut chi = Bits::default();
    for (i, rec) in rdr.deserialize::<(usize, u8, f64)>().enumerate() {
        let (j, c, l) = rec?;
        ensure!(j == i, "row {i} has index {j}");
        ensure!(c <= 1, "chi must be 0 or 1 (row {i})");
        lambda.push(l);
        chi.push(c == 1);
    }
    let env = Environment::from_parts(spec_of(&header)?, lambda, chi)?;
    Ok((header, env))
}

/// JSON form: `{header, lambda, chi}` with `chi` as 0/1 integers.
pub fn env_json(env: &Environment, header: &Header) -> serde_json::Value {
    let chi: Vec<u8> = (0..env.len()).map(|j| env.chi().get(j) as u8).collect();
    serde_json::json!({ "header": header, "lambda": env.lambda(), "chi": chi })
}
