//! Weighted eigenproblem checks on real ground states: the first-eigenvalue
//! identity for the t^(k-2) weight, the eigenvector against V', spectrum
//! structure under domain growth and mesh refinement, kernel detection, and
//! the discretized full Morse index against the closed form.

use henon_core::linearization::{
    assemble, degeneracy, eigen, eigen_extrapolated, full_morse_index, morse_index_in_e,
    profile_dv_at, MeshParams, WeightKind,
};
use henon_core::nonlinearity::NonlinearitySpec;
use henon_core::radial_ode::{shoot_ground_state, ProblemSpec, RadialProfile, ShootOptions};
use henon_core::spectral_geometry::morse_index;
use std::sync::OnceLock;

fn cubic_k2() -> &'static (ProblemSpec, RadialProfile) {
    static CASE: OnceLock<(ProblemSpec, RadialProfile)> = OnceLock::new();
    CASE.get_or_init(|| {
        let spec = ProblemSpec::new(3, 0.0, NonlinearitySpec::power(3.0).unwrap()).unwrap();
        let p = shoot_ground_state(&spec, &ShootOptions::default()).unwrap();
        (spec, p)
    })
}

#[test]
fn km2_first_eigenvalue_is_minus_k() {
    let (spec, prof) = cubic_k2();
    let mesh = MeshParams::default();
    let s = eigen_extrapolated(prof, spec, &mesh, WeightKind::Km2Weight, 2).unwrap();
    let rel = (s.eigenvalues[0] + spec.k).abs() / spec.k;
    assert!(rel < 1e-4, "lambda1 = {}, rel {rel:.2e}", s.eigenvalues[0]);
    assert!(s.eigenvalues[1] > 0.0, "lambda2 = {}", s.eigenvalues[1]);
    assert_eq!(s.negative_count, 1);
}

#[test]
fn km2_eigenvector_matches_v_prime() {
    let (spec, prof) = cubic_k2();
    let mesh = MeshParams::default();
    let s = eigen_extrapolated(prof, spec, &mesh, WeightKind::Km2Weight, 1).unwrap();
    let mut v1 = s.eigenvectors[0].clone();
    let dv = profile_dv_at(prof, &s.dof_nodes).unwrap();

    // B-normalize the V' trace with the fine-mesh km2 masses.
    let op = henon_core::linearization::assemble_refined(prof, spec, &mesh).unwrap();
    assert_eq!(op.dof_nodes.len(), v1.len());
    assert_eq!(op.dof_nodes, s.dof_nodes);
    let norm = |x: &[f64]| -> f64 {
        x.iter().zip(op.b_km2.iter()).map(|(v, b)| b * v * v).sum::<f64>().sqrt()
    };
    let mut w: Vec<f64> = dv;
    let nw = norm(&w);
    for x in &mut w {
        *x /= nw;
    }
    // Align signs (V' < 0; the solver normalizes the vector's peak positive).
    let dot: f64 = v1.iter().zip(&w).zip(op.b_km2.iter()).map(|((a, b), m)| m * a * b).sum();
    if dot < 0.0 {
        for x in &mut v1 {
            *x = -*x;
        }
    }
    let err2: f64 = v1
        .iter()
        .zip(&w)
        .zip(op.b_km2.iter())
        .map(|((a, b), m)| m * (a - b) * (a - b))
        .sum();
    assert!(err2.sqrt() < 1e-3, "L2(km2) error {}", err2.sqrt());
}

#[test]
fn rayleigh_quotient_of_v_prime() {
    let (spec, prof) = cubic_k2();
    let mesh = MeshParams::default();
    let op = assemble(prof, spec, &mesh).unwrap();
    let w = profile_dv_at(prof, &op.dof_nodes).unwrap();
    let r = op.rayleigh(WeightKind::Km2Weight, &w);
    assert!((r + spec.k).abs() < 5e-3 * spec.k, "rayleigh {r}");
}

#[test]
fn morse_index_one_and_full_index() {
    let (spec, prof) = cubic_k2();
    let mesh = MeshParams::default();
    assert_eq!(morse_index_in_e(prof, spec, &mesh).unwrap(), 1);

    // p = 3, N = 4, alpha = 1: still index one in the energy space, and the
    // discretized full index matches the closed form.
    let spec2 = ProblemSpec::new(4, 1.0, NonlinearitySpec::power(3.0).unwrap()).unwrap();
    let prof2 = shoot_ground_state(&spec2, &ShootOptions::default()).unwrap();
    for nodes in [2000usize, 4000] {
        let mesh2 = MeshParams::with_nodes(nodes);
        assert_eq!(morse_index_in_e(&prof2, &spec2, &mesh2).unwrap(), 1);
    }
    let op2 = assemble(&prof2, &spec2, &MeshParams::default()).unwrap();
    assert_eq!(
        full_morse_index(&op2, &spec2).unwrap(),
        morse_index(1.0, 4).unwrap()
    );
}

#[test]
fn nondegenerate_ground_state() {
    let (spec, prof) = cubic_k2();
    let d = degeneracy(prof, spec, &MeshParams::default()).unwrap();
    assert_eq!(d.n_alpha, 0);
    assert!(!d.unresolved);
}

#[test]
fn eigenvalues_decrease_with_domain_growth() {
    // At a fixed interior mesh, extending the Dirichlet truncation point by
    // appending cells can only lower the eigenvalues; the first one has
    // already converged to 1e-6 at the default T.
    let spec = ProblemSpec::new(3, 0.0, NonlinearitySpec::power(3.0).unwrap()).unwrap();
    let prof = shoot_ground_state(
        &spec,
        &ShootOptions { tail_len: Some(35.0), ..Default::default() },
    )
    .unwrap();
    let t0 = prof.handoff_t() + 10.0;
    let base = MeshParams::default().build_nodes(t0).unwrap();
    let h_bulk = base[base.len() - 1] - base[base.len() - 2];
    let assemble_extended = |factor: f64| {
        let mut nodes = base.clone();
        let mut t = t0;
        while t < t0 * factor {
            t += h_bulk;
            nodes.push(t);
        }
        let pot: Vec<f64> = nodes[..nodes.len() - 1]
            .iter()
            .map(|&t| spec.f.eval(prof.value_at(t).unwrap().0, spec.alpha).unwrap().1)
            .collect();
        henon_core::linearization::assemble_from_potential(&nodes, spec.k, &pot).unwrap()
    };
    let mut prev: Option<Vec<f64>> = None;
    let mut lambda1 = Vec::new();
    for factor in [1.0, 1.5, 2.0] {
        let op = assemble_extended(factor);
        let s = eigen(&op, WeightKind::KWeight, 4).unwrap();
        if let Some(p) = prev {
            for (now, before) in s.eigenvalues_fine.iter().zip(&p) {
                assert!(now <= &(before + 1e-12), "{now} vs {before}");
            }
        }
        lambda1.push(s.eigenvalues_fine[0]);
        prev = Some(s.eigenvalues_fine.clone());
    }
    assert!((lambda1[0] - lambda1[1]).abs() < 1e-6, "{lambda1:?}");
}

#[test]
fn eigenvectors_b_orthogonal() {
    let (spec, prof) = cubic_k2();
    let op = assemble(prof, spec, &MeshParams::default()).unwrap();
    let s = eigen(&op, WeightKind::KWeight, 4).unwrap();
    let b = op.mass(WeightKind::KWeight);
    for i in 0..s.eigenvectors.len() {
        for j in 0..i {
            let dot: f64 = s.eigenvectors[i]
                .iter()
                .zip(&s.eigenvectors[j])
                .zip(b.iter())
                .map(|((a, c), m)| m * a * c)
                .sum();
            assert!(dot.abs() < 1e-10, "<v{i}, v{j}>_B = {dot}");
        }
    }
}

#[test]
fn coarse_mesh_breaks_lambda_identity_only() {
    // A deliberately coarse (but accepted) mesh: the 1e-4 eigenvalue identity
    // fails while the integer diagnostics stay put.
    let spec = ProblemSpec::new(3, 1.0, NonlinearitySpec::power(3.0).unwrap()).unwrap();
    let prof = shoot_ground_state(&spec, &ShootOptions::default()).unwrap();
    let mesh = MeshParams::with_nodes(240);
    let s = eigen_extrapolated(&prof, &spec, &mesh, WeightKind::Km2Weight, 1).unwrap();
    let rel = (s.eigenvalues[0] + spec.k).abs() / spec.k;
    assert!(rel > 1e-4, "coarse mesh unexpectedly accurate: rel {rel:.2e}");
    assert_eq!(morse_index_in_e(&prof, &spec, &mesh).unwrap(), 1);
    let op = assemble(&prof, &spec, &mesh).unwrap();
    assert_eq!(
        full_morse_index(&op, &spec).unwrap(),
        morse_index(1.0, 3).unwrap()
    );
}
