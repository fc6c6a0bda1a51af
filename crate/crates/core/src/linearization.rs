//! Finite-volume discretization of the linearized operator around a ground
//! state: the quadratic form int t^k ((w')^2 - F'(V) w^2) dt against the two
//! mass weights t^k (Morse index / kernel detection) and t^(k-2) (the
//! singular weighted eigenproblem whose first eigenvalue is -k, carried by
//! V'). Natural condition at the origin, Dirichlet at the truncation point,
//! Richardson extrapolation over nested mesh bisection.

use crate::error::{Error, Result};
use crate::radial_ode::{ProblemSpec, RadialProfile};
use crate::spectral_geometry::multiplicity;
use crate::tridiag::Pencil;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    /// Mass weight t^k.
    KWeight,
    /// Mass weight t^(k-2).
    Km2Weight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    /// Total node count including the Dirichlet end node.
    pub nodes: usize,
    /// Truncation point; None picks hand-off + 10/sqrt(m).
    pub t_end: Option<f64>,
    /// Span covered geometrically: first node at bulk_start/geo_span.
    pub geo_span: f64,
    /// Fraction of the nodes spent on the geometric section.
    pub geo_frac: f64,
    /// Fraction of T where the uniform bulk begins.
    pub bulk_start_frac: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            nodes: 4000,
            t_end: None,
            geo_span: 1e4,
            geo_frac: 0.125,
            bulk_start_frac: 0.05,
        }
    }
}

impl MeshParams {
    pub fn with_nodes(nodes: usize) -> Self {
        MeshParams { nodes, ..Default::default() }
    }

    /// Nodes sampled from a fixed map (exponential near the origin, linear
    /// in the bulk), so that meshes of different sizes form one refinement
    /// family and eigenvalue errors scale cleanly as h^2.
    pub fn build_nodes(&self, t_end: f64) -> Result<Vec<f64>> {
        if self.nodes < 200 {
            return Err(Error::InvalidParameter(format!(
                "mesh of {} nodes rejected (minimum 200)",
                self.nodes
            )));
        }
        if !(self.geo_span > 1.0 && self.geo_frac > 0.0 && self.geo_frac < 0.8 && self.bulk_start_frac > 0.0)
        {
            return Err(Error::InvalidParameter("bad mesh grading parameters".into()));
        }
        let t_bulk = self.bulk_start_frac * t_end;
        let span_log = self.geo_span.ln();
        let n_geo = ((self.nodes as f64 * self.geo_frac).round() as usize).max(30);
        let n_bulk_cells = self
            .nodes
            .checked_sub(n_geo + 1)
            .filter(|&n| n >= 50)
            .ok_or_else(|| Error::InvalidParameter("mesh too small for the geometric section".into()))?;
        let mut nodes = Vec::with_capacity(self.nodes);
        for i in 0..=n_geo {
            nodes.push(t_bulk * (span_log * (i as f64 / n_geo as f64 - 1.0)).exp());
        }
        let h = (t_end - t_bulk) / n_bulk_cells as f64;
        for i in 1..=n_bulk_cells {
            nodes.push(t_bulk + h * i as f64);
        }
        nodes[self.nodes - 1] = t_end;
        Ok(nodes)
    }
}

/// Nested refinement: a midpoint inserted in every cell.
pub fn bisect_nodes(nodes: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * nodes.len() - 1);
    for i in 0..nodes.len() - 1 {
        out.push(nodes[i]);
        out.push(0.5 * (nodes[i] + nodes[i + 1]));
    }
    out.push(*nodes.last().unwrap());
    out
}

/// Assembled tridiagonal pencil data for one mesh.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub dof_nodes: Vec<f64>,
    pub t_end: f64,
    pub k: f64,
    stiff_diag: Vec<f64>,
    stiff_off: Vec<f64>,
    pot: Vec<f64>,
    pub b_k: Vec<f64>,
    pub b_km2: Vec<f64>,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.dof_nodes.len()
    }

    fn a_diag(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.stiff_diag[i] - self.pot[i] * self.b_k[i])
            .collect()
    }

    pub fn mass(&self, which: WeightKind) -> &[f64] {
        match which {
            WeightKind::KWeight => &self.b_k,
            WeightKind::Km2Weight => &self.b_km2,
        }
    }

    /// Pencil (A + shift * B_km2, B_which).
    pub fn pencil_shifted(&self, which: WeightKind, shift_km2: f64) -> Pencil {
        let mut diag = self.a_diag();
        if shift_km2 != 0.0 {
            for i in 0..diag.len() {
                diag[i] += shift_km2 * self.b_km2[i];
            }
        }
        Pencil { diag, off: self.stiff_off.clone(), b: self.mass(which).to_vec() }
    }

    pub fn pencil(&self, which: WeightKind) -> Pencil {
        self.pencil_shifted(which, 0.0)
    }

    /// Rayleigh quotient of a grid function against the chosen mass weight.
    pub fn rayleigh(&self, which: WeightKind, w: &[f64]) -> f64 {
        let p = self.pencil(which);
        let aw = p.apply(w);
        let num: f64 = w.iter().zip(&aw).map(|(x, y)| x * y).sum();
        let den: f64 = w.iter().zip(p.b.iter()).map(|(x, b)| b * x * x).sum();
        num / den
    }
}

/// Construction from an explicit potential trace q_i = F'(V(t_i)); also the
/// entry point for synthetic operators in tests.
pub fn assemble_from_potential(nodes: &[f64], k: f64, pot: &[f64]) -> Result<DiscreteOperator> {
    let m = nodes.len();
    if m < 3 || pot.len() != m - 1 {
        return Err(Error::InvalidParameter("assemble: need nodes >= 3 and one potential value per interior node".into()));
    }
    if nodes.windows(2).any(|w| w[0] >= w[1]) || nodes[0] <= 0.0 {
        return Err(Error::InvalidParameter("assemble: nodes must be positive and increasing".into()));
    }
    if !(k > 1.0) {
        return Err(Error::InvalidParameter(format!("assemble: k = {k} must be > 1")));
    }
    let dofs = m - 1;
    let mut edges = Vec::with_capacity(m);
    edges.push(0.0);
    for i in 0..m - 1 {
        edges.push(0.5 * (nodes[i] + nodes[i + 1]));
    }
    // edges[i] is the right edge of cell i (1-based over DOFs).
    let mut stiff_diag = vec![0.0; dofs];
    let mut stiff_off = vec![0.0; dofs - 1];
    let mut b_k = vec![0.0; dofs];
    let mut b_km2 = vec![0.0; dofs];
    for i in 0..dofs {
        let right = edges[i + 1].powf(k) / (nodes[i + 1] - nodes[i]);
        let left = if i == 0 { 0.0 } else { edges[i].powf(k) / (nodes[i] - nodes[i - 1]) };
        stiff_diag[i] = left + right;
        if i + 1 < dofs {
            stiff_off[i] = -right;
        }
        b_k[i] = (edges[i + 1].powf(k + 1.0) - edges[i].powf(k + 1.0)) / (k + 1.0);
        b_km2[i] = (edges[i + 1].powf(k - 1.0) - edges[i].powf(k - 1.0)) / (k - 1.0);
        if !(stiff_diag[i].is_finite() && b_k[i] > 0.0 && b_km2[i] > 0.0) {
            return Err(Error::Numeric(format!("assembly produced bad entries at t = {}", nodes[i])));
        }
    }
    Ok(DiscreteOperator {
        dof_nodes: nodes[..dofs].to_vec(),
        t_end: nodes[m - 1],
        k,
        stiff_diag,
        stiff_off,
        pot: pot.to_vec(),
        b_k,
        b_km2,
    })
}

fn default_t_end(profile: &RadialProfile, spec: &ProblemSpec) -> f64 {
    profile.handoff_t() + 10.0 / spec.mass().sqrt()
}

/// Assembles the linearized operator around a profile on the graded mesh.
pub fn assemble(profile: &RadialProfile, spec: &ProblemSpec, mesh: &MeshParams) -> Result<DiscreteOperator> {
    let t_end = mesh.t_end.unwrap_or_else(|| default_t_end(profile, spec));
    let required = default_t_end(profile, spec) - 1e-9;
    if t_end < required {
        return Err(Error::InvalidParameter(format!(
            "mesh t_end = {t_end} below hand-off + 10/sqrt(m) = {required}"
        )));
    }
    if t_end > profile.t_end() + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "mesh t_end = {t_end} beyond the profile range {}",
            profile.t_end()
        )));
    }
    let nodes = mesh.build_nodes(t_end)?;
    assemble_on_nodes(profile, spec, &nodes)
}

fn assemble_on_nodes(profile: &RadialProfile, spec: &ProblemSpec, nodes: &[f64]) -> Result<DiscreteOperator> {
    let mut pot = Vec::with_capacity(nodes.len() - 1);
    for &t in &nodes[..nodes.len() - 1] {
        let (v, _) = profile.value_at(t)?;
        pot.push(spec.f.eval(v, spec.alpha)?.1);
    }
    assemble_from_potential(nodes, spec.k, &pot)
}

/// The operator on the once-bisected mesh (the fine half of the Richardson
/// pair); eigenvectors from `eigen_extrapolated` live on its DOF nodes.
pub fn assemble_refined(profile: &RadialProfile, spec: &ProblemSpec, mesh: &MeshParams) -> Result<DiscreteOperator> {
    let t_end = mesh.t_end.unwrap_or_else(|| default_t_end(profile, spec));
    let nodes = bisect_nodes(&mesh.build_nodes(t_end)?);
    assemble_on_nodes(profile, spec, &nodes)
}

/// V' sampled at the operator's DOF nodes.
pub fn profile_dv_at(profile: &RadialProfile, nodes: &[f64]) -> Result<Vec<f64>> {
    nodes.iter().map(|&t| profile.value_at(t).map(|p| p.1)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub which_weight: WeightKind,
    /// Best available values (Richardson-extrapolated when two meshes were
    /// used), ascending.
    pub eigenvalues: Vec<f64>,
    /// Fine-mesh values before extrapolation.
    pub eigenvalues_fine: Vec<f64>,
    /// |fine - coarse| per eigenvalue; empty for single-mesh solves.
    pub refinement: Vec<f64>,
    /// Fine-mesh, B-normalized eigenvectors.
    pub eigenvectors: Vec<Vec<f64>>,
    pub dof_nodes: Vec<f64>,
    pub negative_count: usize,
}

impl SpectrumResult {
    fn check_ascending(&self) -> Result<()> {
        if self.eigenvalues.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Numeric("eigenvalues not strictly increasing".into()));
        }
        Ok(())
    }
}

/// Smallest eigenpairs of one assembled operator.
pub fn eigen(op: &DiscreteOperator, which: WeightKind, n_eigs: usize) -> Result<SpectrumResult> {
    eigen_with_start(op, which, n_eigs, None)
}

fn eigen_with_start(
    op: &DiscreteOperator,
    which: WeightKind,
    n_eigs: usize,
    start0: Option<&[f64]>,
) -> Result<SpectrumResult> {
    let pencil = op.pencil(which);
    let eigenvalues = pencil.smallest_eigenvalues(n_eigs);
    let mut eigenvectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
    for (j, &l) in eigenvalues.iter().enumerate() {
        let start = if j == 0 { start0 } else { None };
        let mut v = pencil.eigenvector(l, start)?;
        // One B-orthogonalization pass against earlier vectors.
        for prev in &eigenvectors {
            let dot: f64 = v.iter().zip(prev).zip(&pencil.b).map(|((a, p), b)| b * a * p).sum();
            for i in 0..v.len() {
                v[i] -= dot * prev[i];
            }
        }
        let norm: f64 = v.iter().zip(&pencil.b).map(|(a, b)| b * a * a).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        eigenvectors.push(v);
    }
    let res = SpectrumResult {
        which_weight: which,
        eigenvalues: eigenvalues.clone(),
        eigenvalues_fine: eigenvalues,
        refinement: Vec::new(),
        eigenvectors,
        dof_nodes: op.dof_nodes.clone(),
        negative_count: pencil.count_below(0.0),
    };
    res.check_ascending()?;
    Ok(res)
}

/// Two-mesh solve with Richardson extrapolation (second-order scheme, nested
/// bisection): lambda = (4 lambda_fine - lambda_coarse) / 3.
pub fn eigen_extrapolated(
    profile: &RadialProfile,
    spec: &ProblemSpec,
    mesh: &MeshParams,
    which: WeightKind,
    n_eigs: usize,
) -> Result<SpectrumResult> {
    let t_end = mesh.t_end.unwrap_or_else(|| default_t_end(profile, spec));
    let coarse_nodes = mesh.build_nodes(t_end)?;
    let fine_nodes = bisect_nodes(&coarse_nodes);
    let op_c = assemble_on_nodes(profile, spec, &coarse_nodes)?;
    let op_f = assemble_on_nodes(profile, spec, &fine_nodes)?;
    let coarse = op_c.pencil(which).smallest_eigenvalues(n_eigs);
    let start = profile_dv_at(profile, &op_f.dof_nodes)?;
    let mut fine = eigen_with_start(&op_f, which, n_eigs, Some(&start))?;
    fine.refinement = fine
        .eigenvalues_fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (f - c).abs())
        .collect();
    fine.eigenvalues = fine
        .eigenvalues_fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect();
    fine.check_ascending()?;
    Ok(fine)
}

/// Morse index of the profile in the energy space: negative count of the
/// t^k-weighted problem.
pub fn morse_index_in_e(profile: &RadialProfile, spec: &ProblemSpec, mesh: &MeshParams) -> Result<usize> {
    let op = assemble(profile, spec, mesh)?;
    Ok(op.pencil(WeightKind::KWeight).count_below(0.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyResult {
    /// Count of extrapolated eigenvalues inside the zero band (0 means
    /// nondegenerate).
    pub n_alpha: u8,
    pub zero_band: f64,
    /// Set when an eigenvalue sits too close to the band edge for the mesh
    /// error to resolve the call.
    pub unresolved: bool,
    pub eigenvalues: Vec<f64>,
    pub shifts: Vec<f64>,
}

/// Kernel detection for the t^k-weighted problem with a mesh-error-scaled
/// zero band (never an exact comparison).
pub fn degeneracy(profile: &RadialProfile, spec: &ProblemSpec, mesh: &MeshParams) -> Result<DegeneracyResult> {
    let n_eigs = 6;
    let spectrum = eigen_extrapolated(profile, spec, mesh, WeightKind::KWeight, n_eigs)?;
    degeneracy_from_spectrum(&spectrum)
}

pub fn degeneracy_from_spectrum(spectrum: &SpectrumResult) -> Result<DegeneracyResult> {
    if spectrum.refinement.is_empty() {
        return Err(Error::InvalidParameter("degeneracy needs a two-mesh spectrum".into()));
    }
    let scale = spectrum.eigenvalues.iter().fold(1e-12f64, |m, l| m.max(l.abs()));
    let mesh_err: Vec<f64> = spectrum.refinement.iter().map(|s| s / 3.0).collect();
    let band = 10.0 * mesh_err.iter().cloned().fold(0.0, f64::max) + 1e-12 * scale;
    let mut n_alpha = 0u8;
    let mut unresolved = false;
    for (j, &l) in spectrum.eigenvalues.iter().enumerate() {
        if l.abs() < band {
            n_alpha = n_alpha.saturating_add(1);
        } else if l.abs() < band + 3.0 * mesh_err[j] {
            unresolved = true;
        }
    }
    if n_alpha > 2 {
        return Err(Error::Numeric(format!(
            "found {n_alpha} near-zero eigenvalues; at most 2 are meaningful"
        )));
    }
    Ok(DegeneracyResult {
        n_alpha,
        zero_band: band,
        unresolved,
        eigenvalues: spectrum.eigenvalues.clone(),
        shifts: spectrum.refinement.clone(),
    })
}

/// Morse index of the lifted solution computed from the discretization: for
/// each spherical-harmonic level i, the form gains 4 mu_i/(2+alpha)^2 times
/// the t^(k-2) mass; each level with a negative direction contributes its
/// multiplicity. Levels are scanned until the first one with none (the shift
/// grows monotonically with i).
pub fn full_morse_index(op: &DiscreteOperator, spec: &ProblemSpec) -> Result<u64> {
    let scale = (2.0 + spec.alpha) * (2.0 + spec.alpha);
    let mut total = 0u64;
    for i in 0..512u32 {
        let shift = 4.0 * crate::spectral_geometry::mu(i, spec.n) as f64 / scale;
        let neg = op.pencil_shifted(WeightKind::KWeight, shift).count_below(0.0);
        if neg == 0 {
            return Ok(total);
        }
        total += multiplicity(i, spec.n)? * neg as u64;
    }
    Err(Error::Numeric("harmonic scan did not terminate".into()))
}
