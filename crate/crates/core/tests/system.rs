use std::collections::BTreeSet;

use wg_stokes::dense::DMat;
use wg_stokes::mesh::Mesh;
use wg_stokes::problem::{paper_case, shear_case};
use wg_stokes::system::{build_dof_map, solve, Discretization, DofMap, Homogeneous, Slot};
use wg_stokes::weakops::project_qh_vector;

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

#[test]
fn unknown_counts_on_the_smallest_mesh() {
    let mesh = Mesh::<f64>::build_structured(1).unwrap();
    assert_eq!(build_dof_map(&mesh, 0).total, 11);
    assert_eq!(build_dof_map(&mesh, 1).total, 25);
    for n in [1, 3, 6] {
        let m = Mesh::<f64>::build_structured(n).unwrap();
        for k in 0..=2 {
            assert_eq!(build_dof_map(&m, k).total, DofMap::structured_count(n, k));
        }
    }
    // Roughly four times as many unknowns per refinement.
    let ratio = DofMap::structured_count(64, 1) as f64 / DofMap::structured_count(32, 1) as f64;
    assert!((ratio - 4.0).abs() < 0.1);
}

#[test]
fn dof_map_is_a_bijection_without_boundary_traces() {
    let mesh = Mesh::<f64>::build_structured(3).unwrap();
    for k in 0..=1 {
        let dofs = build_dof_map(&mesh, k);
        let mut seen = BTreeSet::new();
        for t in 0..mesh.num_triangles() {
            for (local, slot) in dofs.velocity_slots(&mesh, t).into_iter().enumerate() {
                match slot {
                    Slot::Free(g) => {
                        seen.insert(g);
                    }
                    Slot::Fixed(_) => {
                        let nl = dofs.interior_dim + 3 * dofs.trace_dim;
                        let j = (local % nl - dofs.interior_dim) / dofs.trace_dim;
                        assert!(mesh.boundary[mesh.triangle_edges[t][j]]);
                    }
                }
            }
            for m in 0..dofs.interior_dim {
                seen.insert(dofs.pressure_index(t, m));
            }
        }
        seen.insert(dofs.multiplier_index());
        assert_eq!(seen.len(), dofs.total);
        assert_eq!(*seen.iter().next_back().unwrap(), dofs.total - 1);
    }
}

#[test]
fn assembled_matrix_is_exactly_symmetric() {
    let case = paper_case::<f64>();
    for k in 0..=2 {
        let disc = Discretization::new(Mesh::build_structured(3).unwrap(), k).unwrap();
        let sys = disc.assemble(&case).unwrap();
        assert!(sys.matrix.is_symmetric());
        let t = sys.matrix.transpose();
        for (i, j, v) in sys.matrix.iter() {
            assert_eq!(v, t.get(i, j));
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    for k in 0..=1 {
        let disc = Discretization::new(Mesh::build_structured(3).unwrap(), k).unwrap();
        let sys = disc.assemble(&Homogeneous(|_: [f64; 2]| [0.0, 0.0])).unwrap();
        assert!(sys.rhs.iter().all(|&b| b == 0.0));
        let sol = solve(&sys).unwrap();
        assert!(sol.velocity.interior.iter().chain(&sol.velocity.traces).all(|&v| v == 0.0));
        assert!(sol.pressure.coeffs.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn velocity_block_is_positive_definite() {
    for k in 0..=1 {
        let disc = Discretization::new(Mesh::build_structured(2).unwrap(), k).unwrap();
        let a = disc.assemble(&paper_case()).unwrap().velocity_block();
        let dense = DMat::from_fn(a.nrows(), a.ncols(), |i, j| a.get(i, j));
        let (eigs, _) = dense.sym_eigen().unwrap();
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eigs.iter().cloned().fold(0.0, f64::max);
        assert!(min > 1e-6 * max, "k = {k}: λ_min = {min:e}, λ_max = {max:e}");
    }
}

#[test]
fn linear_shear_flow_is_reproduced() {
    let case = shear_case::<f64>();
    for k in 0..=1 {
        let mesh = Mesh::build_structured(2).unwrap();
        let disc = Discretization::new(mesh.clone(), k).unwrap();
        let sol = solve(&disc.assemble(&case).unwrap()).unwrap();
        let exact = project_qh_vector(&mesh, k, case.velocity).unwrap();
        let scale = 1.0 + exact.interior.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in sol.velocity.interior.iter().zip(&exact.interior) {
            assert!((a - b).abs() < 1e-10 * scale, "k = {k}: {a} vs {b}");
        }
        for (a, b) in sol.velocity.traces.iter().zip(&exact.traces) {
            assert!((a - b).abs() < 1e-10 * scale, "k = {k}: {a} vs {b}");
        }
        assert!(sol.pressure.coeffs.iter().all(|p| p.abs() < 1e-10));
    }
}

#[test]
fn solution_contract_on_the_smooth_problem() {
    let case = paper_case::<f64>();
    for k in 0..=1 {
        let disc = Discretization::new(Mesh::build_structured(4).unwrap(), k).unwrap();
        let sys = disc.assemble(&case).unwrap();
        let sol = solve(&sys).unwrap();
        assert!(sol.diagnostics.residual <= 1e-10);
        assert_eq!(sol.diagnostics.unknowns, sys.dofs.total);
        let unorm = sol.velocity.interior.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(disc.max_divergence_moment(&sol.velocity) <= 1e-8 * unorm);
        assert!(sol.pressure.integral(&disc.mesh).unwrap().abs() < 1e-10);
        assert!(sol.pressure.mean_zero);
    }
}

#[test]
fn scaling_the_force_scales_the_solution() {
    let f = paper_case::<f64>().force;
    for k in 0..=1 {
        let disc = Discretization::new(Mesh::build_structured(4).unwrap(), k).unwrap();
        let one = solve(&disc.assemble(&Homogeneous(f)).unwrap()).unwrap();
        let three = solve(&disc.assemble(&Homogeneous(|p| f(p).map(|v| 3.0 * v))).unwrap()).unwrap();
        let scaled = |v: &[f64]| v.iter().map(|x| 3.0 * x).collect::<Vec<_>>();
        assert!(relative_gap(&three.velocity.interior, &scaled(&one.velocity.interior)) <= 1e-10);
        assert!(relative_gap(&three.velocity.traces, &scaled(&one.velocity.traces)) <= 1e-10);
        assert!(relative_gap(&three.pressure.coeffs, &scaled(&one.pressure.coeffs)) <= 1e-10);
    }
}

#[test]
fn boundary_traces_carry_the_projected_data() {
    let case = paper_case::<f64>();
    let mesh = Mesh::build_structured(3).unwrap();
    let disc = Discretization::new(mesh.clone(), 1).unwrap();
    let sol = solve(&disc.assemble(&case).unwrap()).unwrap();
    let q = project_qh_vector(&mesh, 1, case.velocity).unwrap();
    for e in (0..mesh.num_edges()).filter(|&e| mesh.boundary[e]) {
        for c in 0..2 {
            assert_eq!(sol.velocity.trace_coeffs(e, c), q.trace_coeffs(e, c));
        }
    }
}

#[test]
fn system_dump_writes_coordinates_and_right_side() {
    let disc = Discretization::new(Mesh::<f64>::build_structured(1).unwrap(), 0).unwrap();
    let sys = disc.assemble(&paper_case()).unwrap();
    let dir = std::env::temp_dir().join(format!("wg-stokes-dump-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("k.txt");
    sys.dump(&path).unwrap();
    let matrix = std::fs::read_to_string(&path).unwrap();
    let rhs = std::fs::read_to_string(dir.join("k.txt.rhs")).unwrap();
    let entries: Vec<(usize, usize, f64)> = matrix
        .lines()
        .filter(|l| !l.starts_with('%') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<_> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(entries.len(), sys.matrix.nnz());
    for (i, j, v) in entries {
        assert_eq!(v, sys.matrix.get(i, j));
    }
    let b: Vec<f64> = rhs.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(b, sys.rhs);
    std::fs::remove_dir_all(dir).unwrap();
}
