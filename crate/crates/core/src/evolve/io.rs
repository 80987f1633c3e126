//! On-disk formats of a run: the trace CSV and raw snapshot blobs.
//!
//! Snapshot layout (little endian): `u64 N`, `u64 m_x`, `u64 n`, `f64 t`, then
//! `N * m_x * n` doubles, row-major over grid points with the `n` components of a point adjacent.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::semigroup::GridFunction;

use super::run::{Snapshot, TraceRow};

pub const TRACE_COLUMNS: [&str; 11] =
    ["t", "gamma", "gamma_t", "v_hk", "v_l2", "psi_x_hk1", "psi_t_hk", "warp_hk", "grad_psi_hk", "translate_h1", "zeta"];

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> Result<()> {
    writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
    for r in rows {
        let cells = [r.t, r.gamma, r.gamma_t, r.v_hk, r.v_l2, r.psi_x_hk1, r.psi_t_hk, r.warp_hk, r.grad_psi_hk, r.translate_h1, r.zeta];
        let line: Vec<String> = cells.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_trace_csv<R: Read>(mut input: R) -> Result<Vec<TraceRow>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_COLUMNS.join(",").as_str()) {
        return Err(Error::Range("trace header does not match the expected columns".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let x: Vec<f64> = l
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::Range(format!("bad trace cell '{c}': {e}"))))
                .collect::<Result<_>>()?;
            if x.len() != TRACE_COLUMNS.len() {
                return Err(Error::DimensionMismatch { expected: TRACE_COLUMNS.len(), got: x.len() });
            }
            Ok(TraceRow {
                t: x[0],
                gamma: x[1],
                gamma_t: x[2],
                v_hk: x[3],
                v_l2: x[4],
                psi_x_hk1: x[5],
                psi_t_hk: x[6],
                warp_hk: x[7],
                grad_psi_hk: x[8],
                translate_h1: x[9],
                zeta: x[10],
            })
        })
        .collect()
}

pub fn write_snapshot<W: Write>(snap: &Snapshot, mut out: W) -> Result<()> {
    let u = &snap.u;
    let mut buf = Vec::with_capacity(32 + 8 * u.values.len());
    for h in [u.n_periods as u64, u.m_x as u64, u.n as u64] {
        buf.extend_from_slice(&h.to_le_bytes());
    }
    buf.extend_from_slice(&snap.t.to_le_bytes());
    for z in &u.values {
        buf.extend_from_slice(&z.re.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<Snapshot> {
    let mut head = [0u8; 32];
    input.read_exact(&mut head)?;
    let word = |i: usize| u64::from_le_bytes(head[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let (np, m_x, n) = (word(0) as usize, word(1) as usize, word(2) as usize);
    let t = f64::from_le_bytes(head[24..32].try_into().expect("8 bytes"));
    let len = np.checked_mul(m_x).and_then(|p| p.checked_mul(n)).filter(|&l| l > 0 && l < 1 << 32);
    let Some(len) = len else {
        return Err(Error::Range(format!("implausible snapshot header N={np}, m_x={m_x}, n={n}")));
    };
    let mut body = vec![0u8; 8 * len];
    input.read_exact(&mut body)?;
    let values = body.chunks_exact(8).map(|b| C64::new(f64::from_le_bytes(b.try_into().expect("8 bytes")), 0.0)).collect();
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Range("trailing bytes after snapshot payload".into()));
    }
    Ok(Snapshot { t, u: GridFunction { n_periods: np, m_x, n, values } })
}
