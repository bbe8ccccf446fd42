//! Binary and CSV containers.
//!
//! Sequence binary layout (little-endian): magic `SEQF`, `u32` version,
//! `u64` n, `u64` d, then `n·d` row-major `f64`.
//!
//! Descriptor layout: magic `SEQD`, `u32` version, `u32` scheme tag, the
//! hinge parameters `η, λ, C` as `f64`, then a scheme-specific body built from
//! matrix blocks (`u64` rows, `u64` cols, row-major `f64`):
//! - avg/rp/bkrp/ibkrp: `u32` kernel kind (0 linear, 1 RBF), `f64` σ, block `z` (1×d)
//! - grp: block `U` (d×p)
//! - krpfs: `f64` σ, block `A` (n×p), block source frames (n×d)
//!
//! CSV: first line `# seqf d=<d>`, then one comma-separated row per frame.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::FeatureSequence;
use crate::error::{Error, Result};
use crate::grassmann::GrassmannPoint;
use crate::kernel::{gram, FrameKernel, RbfParams};
use crate::pooling::{Descriptor, GrpDescriptor, HingeParams, Scheme, SubspaceDescriptor, VectorDescriptor};

const SEQUENCE_MAGIC: &[u8; 4] = b"SEQF";
const DESCRIPTOR_MAGIC: &[u8; 4] = b"SEQD";
const VERSION: u32 = 1;

pub const SEQUENCE_EXTENSION: &str = "seqf";
pub const DESCRIPTOR_EXTENSION: &str = "seqd";

struct Reader<R> {
    inner: R,
    what: &'static str,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Truncated(format!("{} ended early", self.what)),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn finite(&mut self, field: &str) -> Result<f64> {
        let v = self.f64()?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{} field {field}", self.what)));
        }
        Ok(v)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got: [u8; 4] = self.bytes()?;
        if &got != magic {
            return Err(Error::MalformedHeader(format!("bad magic {:?}, expected {:?}", String::from_utf8_lossy(&got), String::from_utf8_lossy(magic))));
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(Error::MalformedHeader(format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn dims(&mut self) -> Result<(usize, usize)> {
        let rows = self.u64()?;
        let cols = self.u64()?;
        let too_big = || Error::MalformedHeader(format!("implausible matrix shape {rows}x{cols}"));
        let rows = usize::try_from(rows).map_err(|_| too_big())?;
        let cols = usize::try_from(cols).map_err(|_| too_big())?;
        if rows.checked_mul(cols).is_none_or(|c| c > (1 << 34)) {
            return Err(too_big());
        }
        Ok((rows, cols))
    }

    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let (rows, cols) = self.dims()?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(self.f64()?);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} entry ({}, {})", self.what, pos / cols.max(1), pos % cols.max(1))));
        }
        Ok(DMatrix::from_row_slice(rows, cols, &values))
    }
}

fn put_matrix(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_sequence_binary(seq: &FeatureSequence<f64>, w: &mut impl Write) -> Result<()> {
    w.write_all(SEQUENCE_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    put_matrix(w, seq.data())
}

pub fn read_sequence_binary(r: &mut impl Read) -> Result<FeatureSequence<f64>> {
    let mut rd = Reader { inner: r, what: "sequence" };
    rd.header(SEQUENCE_MAGIC)?;
    let m = rd.matrix()?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::MalformedHeader(format!("empty sequence shape {}x{}", m.nrows(), m.ncols())));
    }
    FeatureSequence::new(m)
}

pub fn write_sequence_csv(seq: &FeatureSequence<f64>, w: &mut impl Write) -> Result<()> {
    writeln!(w, "# seqf d={}", seq.dim())?;
    let data = seq.data();
    for i in 0..seq.len() {
        let row: Vec<String> = (0..seq.dim()).map(|j| format!("{:?}", data[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_sequence_csv(r: impl BufRead) -> Result<FeatureSequence<f64>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::MalformedHeader("missing header line".into()))??;
    let fields = header.trim().trim_start_matches('#').trim();
    let fields = fields.strip_prefix("seqf").map(str::trim).unwrap_or(fields);
    let d: usize = fields
        .strip_prefix("d=")
        .and_then(|v| v.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::MalformedHeader(format!("expected '# seqf d=<d>', got {header:?}")))?;
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MalformedHeader(format!("row {}: {e}", lineno + 1)))?;
        if row.len() != d {
            return Err(Error::Truncated(format!("row {} has {} values, header declares {d}", lineno + 1, row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("row {}", lineno + 1)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Truncated("no frames after header".into()));
    }
    FeatureSequence::from_rows(&rows)
}

enum SeqFormat {
    Binary,
    Csv,
}

fn sequence_format(path: &Path) -> Result<SeqFormat> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some(SEQUENCE_EXTENSION) | Some("bin") => Ok(SeqFormat::Binary),
        Some("csv") => Ok(SeqFormat::Csv),
        other => Err(Error::UnsupportedExtension(other.unwrap_or("<none>").to_string())),
    }
}

/// Reads a `.seqf` (binary) or `.csv` sequence.
pub fn load_sequence(path: impl AsRef<Path>) -> Result<FeatureSequence<f64>> {
    let path = path.as_ref();
    let format = sequence_format(path)?;
    let mut r = BufReader::new(File::open(path)?);
    let seq = match format {
        SeqFormat::Binary => {
            let seq = read_sequence_binary(&mut r)?;
            let mut rest = [0u8; 1];
            if r.read(&mut rest)? != 0 {
                return Err(Error::MalformedHeader("trailing bytes after payload".into()));
            }
            seq
        }
        SeqFormat::Csv => read_sequence_csv(r)?,
    };
    Ok(seq.with_id(path.display().to_string()))
}

pub fn save_sequence(seq: &FeatureSequence<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = sequence_format(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        SeqFormat::Binary => write_sequence_binary(seq, &mut w)?,
        SeqFormat::Csv => write_sequence_csv(seq, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

pub fn write_descriptor(desc: &Descriptor<f64>, w: &mut impl Write) -> Result<()> {
    w.write_all(DESCRIPTOR_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&desc.scheme().tag().to_le_bytes())?;
    let hinge = match desc {
        Descriptor::Vector(v) => v.hinge,
        Descriptor::Grp(g) => g.hinge,
        Descriptor::Subspace(s) => s.hinge,
    };
    for v in [hinge.eta, hinge.lambda, hinge.slack_weight] {
        w.write_all(&v.to_le_bytes())?;
    }
    match desc {
        Descriptor::Vector(v) => {
            let (kind, sigma) = match v.kernel {
                FrameKernel::Linear => (0u32, 0.0),
                FrameKernel::Rbf(p) => (1u32, p.sigma()),
            };
            w.write_all(&kind.to_le_bytes())?;
            w.write_all(&sigma.to_le_bytes())?;
            put_matrix(w, &DMatrix::from_row_slice(1, v.z.len(), &v.z))
        }
        Descriptor::Grp(g) => put_matrix(w, &g.u),
        Descriptor::Subspace(s) => {
            w.write_all(&s.sigma.sigma().to_le_bytes())?;
            put_matrix(w, s.a.matrix())?;
            put_matrix(w, s.source.data())
        }
    }
}

pub fn read_descriptor(r: &mut impl Read) -> Result<Descriptor<f64>> {
    let mut rd = Reader { inner: r, what: "descriptor" };
    rd.header(DESCRIPTOR_MAGIC)?;
    let tag = rd.u32()?;
    let scheme = Scheme::from_tag(tag).ok_or_else(|| Error::MalformedHeader(format!("unknown scheme tag {tag}")))?;
    let hinge = HingeParams { eta: rd.finite("eta")?, lambda: rd.finite("lambda")?, slack_weight: rd.finite("C")? };
    Ok(match scheme {
        Scheme::Grp => Descriptor::Grp(GrpDescriptor { u: rd.matrix()?, hinge }),
        Scheme::Krpfs => {
            let sigma = RbfParams::new(rd.finite("sigma")?).map_err(|e| Error::MalformedHeader(e.to_string()))?;
            let a = rd.matrix()?;
            let source = FeatureSequence::new(rd.matrix()?)?;
            if a.nrows() != source.len() || a.ncols() == 0 {
                return Err(Error::MalformedHeader(format!("A is {}x{} for {} source frames", a.nrows(), a.ncols(), source.len())));
            }
            let k = gram(&source, &sigma);
            let residual = (a.transpose() * k.values() * &a - DMatrix::identity(a.ncols(), a.ncols())).norm();
            if !(residual < 1e-6) {
                return Err(Error::MalformedHeader(format!("stored A is not K-orthonormal (residual {residual:e})")));
            }
            let a = GrassmannPoint::from_raw(a);
            Descriptor::Subspace(SubspaceDescriptor { a, source, sigma, hinge })
        }
        _ => {
            let kind = rd.u32()?;
            let sigma = rd.finite("sigma")?;
            let kernel = match kind {
                0 => FrameKernel::Linear,
                1 => FrameKernel::Rbf(RbfParams::new(sigma).map_err(|e| Error::MalformedHeader(e.to_string()))?),
                k => return Err(Error::MalformedHeader(format!("unknown kernel kind {k}"))),
            };
            let z = rd.matrix()?;
            if z.nrows() != 1 {
                return Err(Error::MalformedHeader(format!("vector block must have one row, got {}", z.nrows())));
            }
            Descriptor::Vector(VectorDescriptor { z: z.iter().copied().collect(), scheme, kernel, hinge })
        }
    })
}

pub fn save_descriptor(desc: &Descriptor<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_descriptor(desc, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_descriptor(path: impl AsRef<Path>) -> Result<Descriptor<f64>> {
    read_descriptor(&mut BufReader::new(File::open(path)?))
}
