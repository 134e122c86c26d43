//! Breakpoint-aligned mesh and P1 finite-element matrices.
//!
//! All matrices act on interior nodes `x_1 .. x_{N-1}` (homogeneous Dirichlet
//! data at both ends), except `k_beta` which lives on the delay nodes
//! `(0, beta]`: Dirichlet at 0, natural (free) at `beta`.

use std::io::{self, Write};

use crate::linalg::{SymTridiag, Triplet};
use crate::model::{validate_params, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// `0 = x_0 < ... < x_N = L`.
    pub nodes: Vec<f64>,
    pub index_alpha: usize,
    pub index_beta: usize,
    pub index_gamma: usize,
    /// `N - 1`.
    pub n_int: usize,
    /// Number of nodes in `(0, beta]`, equal to `index_beta`.
    pub m_eta: usize,
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    pub fn h_min(&self) -> f64 {
        self.widths().fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.widths().fold(0.0, f64::max)
    }

    /// Largest frequency the mesh resolves, `pi / (2 h_min)`.
    pub fn lambda_max(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.h_min())
    }
}

/// Union of four uniform grids on `[0,alpha]`, `[alpha,beta]`, `[beta,gamma]`,
/// `[gamma,L]` with cell counts proportional to their lengths.
pub fn build_mesh(p: &ModelParams, nx: usize) -> Result<Mesh> {
    validate_params(*p)?;
    if nx < 8 {
        return Err(Error::Resolution(format!("nx = {nx} < 8")));
    }
    let edges = [0.0, p.alpha, p.beta, p.gamma, p.length];
    let mut nodes = vec![0.0];
    let mut marks = [0usize; 3];
    for piece in 0..4 {
        let (lo, hi) = (edges[piece], edges[piece + 1]);
        let cells = (nx as f64 * (hi - lo) / p.length).round() as usize;
        if cells < 2 {
            return Err(Error::Resolution(format!(
                "nx = {nx} gives {cells} cell(s) on [{lo}, {hi}]; need at least 2"
            )));
        }
        for k in 1..cells {
            nodes.push(lo + (hi - lo) * k as f64 / cells as f64);
        }
        nodes.push(hi);
        if piece < 3 {
            marks[piece] = nodes.len() - 1;
        }
    }
    let n_int = nodes.len() - 2;
    Ok(Mesh {
        nodes,
        index_alpha: marks[0],
        index_beta: marks[1],
        index_gamma: marks[2],
        n_int,
        m_eta: marks[1],
    })
}

/// P1 matrices on a [`Mesh`], all symmetric tridiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FemMatrices {
    /// Consistent mass on interior nodes.
    pub mass: SymTridiag,
    /// Stiffness (H^1_0 seminorm Gram) on interior nodes.
    pub stiffness: SymTridiag,
    /// `b`-weighted stiffness, supported on cells in `(0, beta)`.
    pub stiffness_b: SymTridiag,
    /// `c`-weighted mass, supported on cells in `(alpha, gamma)`.
    pub mass_c: SymTridiag,
    /// Stiffness on `(0, beta)` over the delay nodes, Dirichlet at 0, free at `beta`.
    pub stiffness_beta: SymTridiag,
}

pub fn assemble_fem(p: &ModelParams, mesh: &Mesh) -> Result<FemMatrices> {
    let n = mesh.n_int;
    let mut mass = SymTridiag::zeros(n);
    let mut stiffness = SymTridiag::zeros(n);
    let mut stiffness_b = SymTridiag::zeros(n);
    let mut mass_c = SymTridiag::zeros(n);

    for (cell, w) in mesh.nodes.windows(2).enumerate() {
        let h = w[1] - w[0];
        if !(h > 0.0) {
            return Err(Error::Geometry(format!("cell {cell} has width {h}")));
        }
        let mid = 0.5 * (w[0] + w[1]);
        let b = crate::model::eval_b(p, mid)?;
        let c = crate::model::eval_c(p, mid)?;
        // element mass h/6 [2 1; 1 2], element stiffness 1/h [1 -1; -1 1]
        // global node `cell` is interior index `cell - 1`
        let left = cell.checked_sub(1);
        let right = if cell < n { Some(cell) } else { None };
        scatter(&mut mass, left, right, h / 3.0, h / 6.0);
        scatter(&mut stiffness, left, right, 1.0 / h, -1.0 / h);
        if b != 0.0 {
            scatter(&mut stiffness_b, left, right, b / h, -b / h);
        }
        if c != 0.0 {
            scatter(&mut mass_c, left, right, c * h / 3.0, c * h / 6.0);
        }
    }
    let stiffness_beta = stiffness_b.leading(mesh.m_eta);
    Ok(FemMatrices {
        mass,
        stiffness,
        stiffness_b,
        mass_c,
        stiffness_beta,
    })
}

/// Adds a 2x2 element block with diagonal `d` and off-diagonal `o`;
/// `None` marks a Dirichlet end node.
fn scatter(mat: &mut SymTridiag, left: Option<usize>, right: Option<usize>, d: f64, o: f64) {
    if let Some(l) = left {
        mat.diag[l] += d;
    }
    if let Some(r) = right {
        mat.diag[r] += d;
    }
    if let (Some(l), Some(_)) = (left, right) {
        mat.off[l] += o;
    }
}

/// Writes a matrix in the triplet text format: a header line
/// `# rows cols nnz` followed by one `row col value` line per entry
/// (0-based indices, values in shortest round-trip decimal).
pub fn write_triplets<W: Write>(mut w: W, rows: usize, cols: usize, triplets: &[Triplet]) -> io::Result<()> {
    writeln!(w, "# {rows} {cols} {}", triplets.len())?;
    for t in triplets {
        writeln!(w, "{} {} {:?}", t.row, t.col, t.value)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_triplets`].
pub fn read_triplets(text: &str) -> Result<(usize, usize, Vec<Triplet>)> {
    let bad = |line: usize, message: &str| Error::Config {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty triplet file"))?;
    let dims: Vec<usize> = header
        .trim_start_matches('#')
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad(1, "bad header")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(bad(1, "header must be `# rows cols nnz`"));
    }
    let mut out = Vec::with_capacity(dims[2]);
    for (i, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(i + 1, "expected `row col value`"));
        }
        let row = parts[0].parse().map_err(|_| bad(i + 1, "bad row"))?;
        let col = parts[1].parse().map_err(|_| bad(i + 1, "bad col"))?;
        let value = parts[2].parse().map_err(|_| bad(i + 1, "bad value"))?;
        out.push(Triplet::new(row, col, value));
    }
    Ok((dims[0], dims[1], out))
}
