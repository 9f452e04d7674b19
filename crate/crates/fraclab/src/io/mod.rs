//! Trajectory batch files and plain-text series input.
//!
//! Binary batch layout, all integers little-endian:
//!
//! ```text
//! magic "FRTR" | version u32 | kind u8 | n u64 | count u64 | records...
//!
//! record: stream_index u64 | master_seed u64 | dt f64 | has_params u8 |
//!         params | values n x f64
//! ```
//!
//! The params block is present only when `has_params` is 1 and its shape
//! follows the header kind: fbm stores `hurst`; fou stores `hurst kappa
//! theta sigma x0`; lfsm stores `hurst alpha scale`, each one f64. Floats
//! round-trip bit for bit, and the reader rejects wrong magic or version,
//! unknown tags, non-finite samples, truncation, and trailing bytes. The
//! format carries finite samples only; the writer refuses anything else.
//!
//! The CSV alternative is write-only: one row per trajectory holding the
//! stream index, the true Hurst exponent (blank for ingested series), and
//! the samples. [`read_series`] is the opposite direction, pulling real
//! measurement series out of plain CSV for estimation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::process::{FbmParams, FouParams, LfsmParams, ProcessKind, ProcessParams};
use crate::trajectory::{Trajectory, TrajectoryMeta};

pub const TRAJECTORY_MAGIC: [u8; 4] = *b"FRTR";
pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

fn kind_tag(kind: ProcessKind) -> u8 {
    match kind {
        ProcessKind::Fbm => 0,
        ProcessKind::Fou => 1,
        ProcessKind::Lfsm => 2,
    }
}

fn params_fields(params: &ProcessParams) -> Vec<f64> {
    match params {
        ProcessParams::Fbm(p) => vec![p.hurst],
        ProcessParams::Fou(p) => vec![p.hurst, p.kappa, p.theta, p.sigma, p.x0],
        ProcessParams::Lfsm(p) => vec![p.hurst, p.alpha, p.scale],
    }
}

/// Checks that a batch is storable: non-empty, single process kind,
/// single length, finite samples, and per-trajectory params (when
/// present) of the batch kind.
fn check_batch(batch: &[Trajectory]) -> Result<(ProcessKind, usize)> {
    let first = batch.first().ok_or(Error::EmptyInput)?;
    let kind = first.meta.kind;
    let n = first.len();
    for t in batch {
        if t.meta.kind != kind {
            return Err(Error::InvalidParameter(format!(
                "batch mixes process kinds {kind} and {}",
                t.meta.kind
            )));
        }
        if t.len() != n {
            return Err(Error::InvalidParameter(format!(
                "batch mixes lengths {n} and {}",
                t.len()
            )));
        }
        if let Some(p) = &t.meta.true_params {
            if p.kind() != kind {
                return Err(Error::InvalidParameter(format!(
                    "trajectory {} carries {} params in a {kind} batch",
                    t.meta.stream_index,
                    p.kind()
                )));
            }
        }
        if t.values.iter().any(|v| !v.is_finite()) || !t.dt.is_finite() {
            return Err(Error::NonFinite(format!(
                "trajectory {} holds a non-finite sample",
                t.meta.stream_index
            )));
        }
    }
    Ok((kind, n))
}

/// Serializes a batch. The byte stream is a pure function of the batch.
pub fn write_trajectories<W: Write>(w: &mut W, batch: &[Trajectory]) -> Result<()> {
    let (kind, n) = check_batch(batch)?;
    w.write_all(&TRAJECTORY_MAGIC)?;
    w.write_all(&TRAJECTORY_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[kind_tag(kind)])?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(batch.len() as u64).to_le_bytes())?;
    for t in batch {
        w.write_all(&t.meta.stream_index.to_le_bytes())?;
        w.write_all(&t.meta.master_seed.to_le_bytes())?;
        w.write_all(&t.dt.to_le_bytes())?;
        match &t.meta.true_params {
            Some(p) => {
                w.write_all(&[1u8])?;
                for v in params_fields(p) {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            None => w.write_all(&[0u8])?,
        }
        let mut bytes = Vec::with_capacity(8 * t.values.len());
        for v in &t.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    Ok(())
}

/// Strict counterpart of [`write_trajectories`]; the stream must end
/// exactly at the last sample.
pub fn read_trajectories<R: Read>(r: &mut R) -> Result<Vec<Trajectory>> {
    let mut magic = [0u8; 4];
    read_or_corrupt(r, &mut magic)?;
    if magic != TRAJECTORY_MAGIC {
        return Err(Error::Corrupt("bad magic, not a trajectory file".into()));
    }
    let version = read_u32(r)?;
    if version != TRAJECTORY_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: TRAJECTORY_FORMAT_VERSION,
        });
    }
    let mut tag = [0u8; 1];
    read_or_corrupt(r, &mut tag)?;
    let kind = match tag[0] {
        0 => ProcessKind::Fbm,
        1 => ProcessKind::Fou,
        2 => ProcessKind::Lfsm,
        other => return Err(Error::Corrupt(format!("unknown process tag {other}"))),
    };
    let n = read_u64(r)? as usize;
    let count = read_u64(r)? as usize;

    let mut batch = Vec::with_capacity(count);
    for _ in 0..count {
        let stream_index = read_u64(r)?;
        let master_seed = read_u64(r)?;
        let dt = read_f64(r)?;
        if !dt.is_finite() {
            return Err(Error::Corrupt(format!("non-finite dt {dt}")));
        }
        let mut flag = [0u8; 1];
        read_or_corrupt(r, &mut flag)?;
        let true_params = match flag[0] {
            0 => None,
            1 => Some(read_params(r, kind)?),
            other => return Err(Error::Corrupt(format!("unknown params flag {other}"))),
        };
        let mut bytes = vec![0u8; 8 * n];
        read_or_corrupt(r, &mut bytes)?;
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk is 8 bytes")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Corrupt(format!(
                "trajectory {stream_index} holds a non-finite sample"
            )));
        }
        batch.push(Trajectory {
            values,
            dt,
            meta: TrajectoryMeta {
                kind,
                true_params,
                master_seed,
                stream_index,
            },
        });
    }

    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(Error::Corrupt("trailing bytes after last trajectory".into())),
        Err(e) => return Err(Error::Io(e)),
    }
    Ok(batch)
}

fn read_params<R: Read>(r: &mut R, kind: ProcessKind) -> Result<ProcessParams> {
    let params = match kind {
        ProcessKind::Fbm => ProcessParams::Fbm(FbmParams { hurst: read_f64(r)? }),
        ProcessKind::Fou => ProcessParams::Fou(FouParams {
            hurst: read_f64(r)?,
            kappa: read_f64(r)?,
            theta: read_f64(r)?,
            sigma: read_f64(r)?,
            x0: read_f64(r)?,
        }),
        ProcessKind::Lfsm => ProcessParams::Lfsm(LfsmParams {
            hurst: read_f64(r)?,
            alpha: read_f64(r)?,
            scale: read_f64(r)?,
        }),
    };
    params
        .validate()
        .map_err(|e| Error::Corrupt(format!("stored params are invalid: {e}")))?;
    Ok(params)
}

/// Rewraps an open/create failure so the message names the file.
pub(crate) fn with_path(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn save_trajectories(path: &Path, batch: &[Trajectory]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(with_path(path))?);
    write_trajectories(&mut w, batch)?;
    w.flush()?;
    Ok(())
}

pub fn load_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    let mut r = BufReader::new(File::open(path).map_err(with_path(path))?);
    read_trajectories(&mut r)
}

/// Plain-text alternative: one row per trajectory with the stream index,
/// the true Hurst exponent (blank when unknown), then the samples. Floats
/// print in the shortest form that parses back to the same value.
pub fn write_trajectories_csv<W: Write>(w: &mut W, batch: &[Trajectory]) -> Result<()> {
    check_batch(batch)?;
    for t in batch {
        write!(w, "{}", t.meta.stream_index)?;
        match t.true_hurst() {
            Some(h) => write!(w, ",{h}")?,
            None => write!(w, ",")?,
        }
        for v in &t.values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_trajectories_csv(path: &Path, batch: &[Trajectory]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(with_path(path))?);
    write_trajectories_csv(&mut w, batch)?;
    w.flush()?;
    Ok(())
}

/// How [`read_series`] treats the first row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Skip the first row when any of its cells is non-numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

impl HeaderMode {
    pub fn parse(s: &str) -> Option<HeaderMode> {
        match s {
            "auto" => Some(HeaderMode::Auto),
            "present" => Some(HeaderMode::Present),
            "absent" => Some(HeaderMode::Absent),
            _ => None,
        }
    }
}

/// Reads measurement series from CSV: comma separator, `.` decimal,
/// optional single header row. Each row is one series, except that a file
/// of one-cell rows is a single column and yields one series. Blank or
/// unparsable cells fail with their one-based row and column; rows and
/// columns count from the top of the file, header included.
pub fn read_series<R: BufRead>(r: &mut R, header: HeaderMode) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = Vec::new();
    for line in r.lines() {
        lines.push(line?);
    }
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    let mut start = 0;
    match header {
        HeaderMode::Present => start = 1,
        HeaderMode::Absent => {}
        HeaderMode::Auto => {
            if let Some(first) = lines.first() {
                let non_numeric = first
                    .split(',')
                    .any(|cell| cell.trim().parse::<f64>().map_or(true, |v| !v.is_finite()));
                if non_numeric {
                    start = 1;
                }
            }
        }
    }
    for (i, line) in lines.iter().enumerate().skip(start) {
        let row = i + 1;
        if line.trim().is_empty() {
            return Err(Error::Parse {
                row,
                col: 1,
                message: "blank row".into(),
            });
        }
        let mut values = Vec::new();
        for (j, cell) in line.split(',').enumerate() {
            let col = j + 1;
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(Error::Parse {
                    row,
                    col,
                    message: "blank cell".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                col,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    col,
                    message: format!("non-finite value: {cell:?}"),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if rows.iter().all(|r| r.len() == 1) && rows.len() > 1 {
        return Ok(vec![rows.into_iter().map(|r| r[0]).collect()]);
    }
    Ok(rows)
}

pub fn load_series(path: &Path, header: HeaderMode) -> Result<Vec<Vec<f64>>> {
    let mut r = BufReader::new(File::open(path).map_err(with_path(path))?);
    read_series(&mut r, header)
}

fn read_or_corrupt<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            Error::Corrupt("unexpected end of file".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_or_corrupt(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_or_corrupt(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_or_corrupt(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_batch() -> Vec<Trajectory> {
        let mk = |idx: u64, values: Vec<f64>, hurst: Option<f64>| Trajectory {
            values,
            dt: 0.25,
            meta: TrajectoryMeta {
                kind: ProcessKind::Fbm,
                true_params: hurst.map(|h| ProcessParams::Fbm(FbmParams { hurst: h })),
                master_seed: 42,
                stream_index: idx,
            },
        };
        vec![
            mk(0, vec![0.0, 0.5, -0.25, 1.0], Some(0.3)),
            mk(1, vec![0.0, -1.5, 2.5, 0.125], Some(0.7)),
            mk(2, vec![0.0, 1.0 / 3.0, 0.1 + 0.2, -1e-300], None),
        ]
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let batch = toy_batch();
        let mut bytes = Vec::new();
        write_trajectories(&mut bytes, &batch).unwrap();
        let back = read_trajectories(&mut bytes.as_slice()).unwrap();
        assert_eq!(batch, back);
        let mut again = Vec::new();
        write_trajectories(&mut again, &back).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn fou_params_survive_the_round_trip() {
        let mut batch = toy_batch();
        for t in &mut batch {
            t.meta.kind = ProcessKind::Fou;
            t.meta.true_params = Some(ProcessParams::Fou(FouParams {
                hurst: 0.6,
                kappa: 1.5,
                theta: -0.25,
                sigma: 2.0,
                x0: 0.5,
            }));
        }
        let mut bytes = Vec::new();
        write_trajectories(&mut bytes, &batch).unwrap();
        assert_eq!(read_trajectories(&mut bytes.as_slice()).unwrap(), batch);
    }

    #[test]
    fn reader_rejects_damage() {
        let mut bytes = Vec::new();
        write_trajectories(&mut bytes, &toy_batch()).unwrap();

        for cut in [3, 8, 9, 20, bytes.len() / 2, bytes.len() - 1] {
            let r = read_trajectories(&mut &bytes[..cut]);
            assert!(matches!(r, Err(Error::Corrupt(_))), "cut at {cut}: {r:?}");
        }

        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(
            read_trajectories(&mut wrong_magic.as_slice()),
            Err(Error::Corrupt(_))
        ));

        let mut future = bytes.clone();
        future[4..8].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            read_trajectories(&mut future.as_slice()),
            Err(Error::VersionMismatch { found: 9, .. })
        ));

        let mut bad_kind = bytes.clone();
        bad_kind[8] = 7;
        assert!(matches!(
            read_trajectories(&mut bad_kind.as_slice()),
            Err(Error::Corrupt(_))
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            read_trajectories(&mut trailing.as_slice()),
            Err(Error::Corrupt(_))
        ));
    }

    #[test]
    fn writer_rejects_inconsistent_batches() {
        assert!(matches!(write_trajectories(&mut Vec::new(), &[]), Err(Error::EmptyInput)));

        let mut mixed_kind = toy_batch();
        mixed_kind[1].meta.kind = ProcessKind::Fou;
        mixed_kind[1].meta.true_params = None;
        assert!(matches!(
            write_trajectories(&mut Vec::new(), &mixed_kind),
            Err(Error::InvalidParameter(_))
        ));

        let mut mixed_len = toy_batch();
        mixed_len[2].values.push(0.0);
        assert!(matches!(
            write_trajectories(&mut Vec::new(), &mixed_len),
            Err(Error::InvalidParameter(_))
        ));

        let mut with_nan = toy_batch();
        with_nan[0].values[1] = f64::NAN;
        assert!(matches!(
            write_trajectories(&mut Vec::new(), &with_nan),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn csv_rows_hold_index_label_and_samples() {
        let mut out = Vec::new();
        write_trajectories_csv(&mut out, &toy_batch()).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "0,0.3,0,0.5,-0.25,1");
        assert_eq!(lines[1], "1,0.7,0,-1.5,2.5,0.125");
        assert!(lines[2].starts_with("2,,0,"), "{}", lines[2]);
    }

    #[test]
    fn csv_floats_parse_back_to_the_same_bits() {
        let batch = toy_batch();
        let mut out = Vec::new();
        write_trajectories_csv(&mut out, &batch).unwrap();
        let text = String::from_utf8(out).unwrap();
        for (line, t) in text.lines().zip(&batch) {
            let cells: Vec<&str> = line.split(',').collect();
            for (cell, v) in cells[2..].iter().zip(&t.values) {
                assert_eq!(cell.parse::<f64>().unwrap().to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn series_rows_become_series() {
        let text = "0.1,0.2,0.3\n1.0,2.0,3.0\n";
        let got = read_series(&mut text.as_bytes(), HeaderMode::Auto).unwrap();
        assert_eq!(got, vec![vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0]]);
    }

    #[test]
    fn single_column_is_one_series() {
        let text = "1.0\n2.0\n3.0\n4.0\n";
        let got = read_series(&mut text.as_bytes(), HeaderMode::Auto).unwrap();
        assert_eq!(got, vec![vec![1.0, 2.0, 3.0, 4.0]]);
    }

    #[test]
    fn header_is_detected_and_skippable() {
        let text = "cycle,capacity\n1.0,1.85\n2.0,1.84\n";
        let got = read_series(&mut text.as_bytes(), HeaderMode::Auto).unwrap();
        assert_eq!(got, vec![vec![1.0, 1.85], vec![2.0, 1.84]]);

        let got = read_series(&mut text.as_bytes(), HeaderMode::Present).unwrap();
        assert_eq!(got.len(), 2);

        let err = read_series(&mut text.as_bytes(), HeaderMode::Absent).unwrap_err();
        assert!(
            matches!(err, Error::Parse { row: 1, col: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn bad_cells_name_their_location() {
        let text = "1.0,2.0\n3.0,NA\n";
        let err = read_series(&mut text.as_bytes(), HeaderMode::Absent).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, col: 2, .. }), "{err:?}");

        let text = "1.0,,3.0\n";
        let err = read_series(&mut text.as_bytes(), HeaderMode::Absent).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, col: 2, .. }), "{err:?}");

        let text = "1.0,2.0\nnan,3.0\n";
        let err = read_series(&mut text.as_bytes(), HeaderMode::Absent).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, col: 1, .. }), "{err:?}");
    }

    #[test]
    fn empty_input_is_its_own_error() {
        assert!(matches!(
            read_series(&mut "".as_bytes(), HeaderMode::Auto),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            read_series(&mut "a,b\n".as_bytes(), HeaderMode::Auto),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            read_series(&mut "\n\n".as_bytes(), HeaderMode::Auto),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn file_round_trip_preserves_the_batch() {
        let dir = std::env::temp_dir().join(format!("fraclab-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("batch.bin");
        let batch = toy_batch();
        save_trajectories(&path, &batch).unwrap();
        let back = load_trajectories(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(batch, back);
    }
}
