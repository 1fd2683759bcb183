//! Acceptance criteria, one test per criterion. Each prints a single PASS/FAIL line.

use std::process::Command;
use std::time::{Duration, Instant};

use polyddr::ddr::{DofSpace, SpaceKind};
use polyddr::mesh::{agglomerate_pairs, generate_cubic_mesh, generate_tet_mesh, Mesh};
use polyddr::scheme::run_manufactured;
use polyddr::verification::{
    check_adjoint_decay, check_commutation, check_complex, check_poincare_levels, check_polynomial_consistency,
    check_primal_consistency, check_recovery, check_traces, family_meshes, CheckReport,
};

fn verdict(n: usize, ok: bool, detail: String) {
    let detail = detail.trim_end();
    println!("criterion {n:>2}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn failures(reports: &[CheckReport]) -> String {
    let bad: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.to_text()).collect();
    bad.join("\n")
}

/// dim P^k in three variables.
fn dim_pk(k: usize) -> usize {
    (k + 1) * (k + 2) * (k + 3) / 6
}

#[test]
fn criterion_01_local_dof_counts() {
    let expect = [
        ("tetrahedron", (4, 6, 4), [(4, 6, 4, 1), (15, 28, 18, 4), (32, 65, 44, 10)]),
        ("hexahedron", (8, 12, 6), [(8, 12, 6, 1), (27, 46, 24, 4), (54, 99, 56, 10)]),
    ];
    let mut bad = vec![];
    for (name, (nv, ne, nf), rows) in expect {
        for (k, want) in rows.into_iter().enumerate() {
            let got = (
                DofSpace::local_dim(SpaceKind::Grad, k, nv, ne, nf),
                DofSpace::local_dim(SpaceKind::Curl, k, nv, ne, nf),
                DofSpace::local_dim(SpaceKind::Div, k, nv, ne, nf),
                DofSpace::local_dim(SpaceKind::L2, k, nv, ne, nf),
            );
            if got != want {
                bad.push(format!("{name} k={k}: {got:?} != {want:?}"));
            }
        }
    }
    // The same counts from actual mesh cells.
    for (name, mesh) in [("tetrahedron", generate_tet_mesh(1)), ("hexahedron", generate_cubic_mesh(1))] {
        let c = &mesh.cells[0];
        for k in 0..=2 {
            let d = DofSpace::local_dim(SpaceKind::Curl, k, c.vertices.len(), c.edges.len(), c.faces.len());
            let row = if name == "tetrahedron" { [6, 28, 65] } else { [12, 46, 99] };
            if d != row[k] {
                bad.push(format!("{name} mesh cell k={k}: curl {d}"));
            }
        }
    }
    verdict(1, bad.is_empty(), if bad.is_empty() { "tetrahedron and hexahedron counts match for k=0,1,2".into() } else { bad.join("; ") });
}

#[test]
fn criterion_02_global_dims_on_cubic_16() {
    let mesh = generate_cubic_mesh(16);
    let got: Vec<usize> = [(SpaceKind::Curl, 0), (SpaceKind::Curl, 1), (SpaceKind::Div, 0), (SpaceKind::Div, 1)]
        .iter()
        .map(|&(kind, k)| DofSpace::new(&mesh, kind, k).dim)
        .collect();
    let want = vec![13872, 83296, 13056, 63744];
    verdict(2, got == want, format!("dim X_curl (k=0,1) = {:?}, dim X_div (k=0,1) = {:?}", &got[..2], &got[2..]));
}

#[test]
fn criterion_03_complex_property() {
    let start = Instant::now();
    let meshes: Vec<(&str, Mesh)> = vec![
        ("cubic 1", generate_cubic_mesh(1)),
        ("cubic 2", generate_cubic_mesh(2)),
        ("tet 1", generate_tet_mesh(1)),
        ("agglomerated 2", agglomerate_pairs(&generate_cubic_mesh(2), 1)),
    ];
    let mut reports = vec![];
    let mut worst = 0.0f64;
    for (_, mesh) in &meshes {
        for k in 0..=1 {
            let r = check_complex(mesh, k);
            worst = worst.max(r.metrics["max|uC uG|"]).max(r.metrics["max|D uC|"]);
            reports.push(r);
        }
    }
    let elapsed = start.elapsed();
    let ok = reports.iter().all(|r| r.passed) && worst < 1e-10 && elapsed < Duration::from_secs(60);
    verdict(3, ok, format!("max residual {worst:.2e} over {} runs in {:.1}s {}", reports.len(), elapsed.as_secs_f64(), failures(&reports)));
}

#[test]
fn criterion_04_exactness_ranks() {
    let start = Instant::now();
    let mut bad = vec![];
    for n in [1, 2] {
        let mesh = generate_cubic_mesh(n);
        let r = check_complex(&mesh, 0);
        let m = |key: &str| r.metrics.get(key).copied().unwrap_or(f64::NAN) as usize;
        let pk = mesh.num_cells() * dim_pk(0);
        let ok = r.passed
            && m("nullity uG") == 1
            && m("rank uG") == m("nullity uC")
            && m("rank uC") == m("nullity D")
            && m("rank D") == pk;
        if !ok {
            bad.push(format!("cubic {n}: {}", r.to_text()));
        }
    }
    let elapsed = start.elapsed();
    let ok = bad.is_empty() && elapsed < Duration::from_secs(30);
    verdict(4, ok, format!("ranks exact on cubic 1,2 in {:.1}s {}", elapsed.as_secs_f64(), bad.join("; ")));
}

#[test]
fn criterion_05_polynomial_consistency() {
    let meshes = [generate_cubic_mesh(1), generate_tet_mesh(1), agglomerate_pairs(&generate_cubic_mesh(2), 1)];
    let reports: Vec<CheckReport> =
        meshes.iter().flat_map(|m| (0..=2).map(move |k| check_polynomial_consistency(m, k))).collect();
    let ok = reports.iter().all(|r| r.passed);
    verdict(5, ok, format!("{} reports at tolerance 1e-9 {}", reports.len(), failures(&reports)));
}

#[test]
fn criterion_06_commutation() {
    let mesh = generate_cubic_mesh(2);
    let reports: Vec<CheckReport> = (0..=1).map(|k| check_commutation(&mesh, k, 1)).collect();
    let worst = reports.iter().flat_map(|r| r.metrics.values()).fold(0.0f64, |a, &b| a.max(b));
    verdict(6, reports.iter().all(|r| r.passed), format!("worst relative residual {worst:.2e} {}", failures(&reports)));
}

#[test]
fn criterion_07_convergence() {
    let mut lines = vec![];
    let mut ok = true;
    for (k, budget) in [(0usize, 120u64), (1, 900)] {
        let start = Instant::now();
        let mut pts = vec![];
        for n in [2, 4, 8] {
            let r = run_manufactured(&generate_cubic_mesh(n), k).expect("solve failed");
            pts.push((r.mesh_size, r.errors.e_rel));
        }
        let elapsed = start.elapsed().as_secs_f64();
        let ((h0, e0), (h1, e1)) = (pts[1], pts[2]);
        let slope = (e0 / e1).ln() / (h0 / h1).ln();
        ok &= slope >= k as f64 + 0.7 && elapsed < budget as f64;
        lines.push(format!("k={k}: errors {:.3e} {:.3e} {:.3e}, slope {slope:.2} in {elapsed:.1}s", pts[0].1, e0, e1));
    }
    verdict(7, ok, lines.join("; "));
}

#[test]
fn criterion_08_primal_consistency_rates() {
    let r = check_primal_consistency(&family_meshes("cubic", &[2, 4, 8], 0).unwrap(), 0);
    let slopes: Vec<String> =
        r.metrics.iter().filter(|(k, _)| k.ends_with("slope")).map(|(k, v)| format!("{k} {v:.2}")).collect();
    verdict(8, r.passed, format!("{} {}", slopes.join(", "), failures(&[r.clone()])));
}

#[test]
fn criterion_09_adjoint_consistency() {
    let r = check_adjoint_decay(&family_meshes("cubic", &[2, 4, 8], 0).unwrap(), 0);
    let slopes: Vec<String> =
        r.metrics.iter().filter(|(k, _)| k.ends_with("slope")).map(|(k, v)| format!("{k} {v:.2}")).collect();
    let min = r.metrics.iter().filter(|(k, _)| k.ends_with("slope")).fold(f64::INFINITY, |a, (_, &b)| a.min(b));
    verdict(9, r.passed && min >= 0.7, format!("{} {}", slopes.join(", "), failures(&[r.clone()])));
}

#[test]
fn criterion_10_poincare_constants() {
    let r = check_poincare_levels(&family_meshes("cubic", &[1, 2], 0).unwrap(), 0);
    let mut ok = r.passed;
    let mut parts = vec![];
    for key in ["C_grad", "C_curl", "C_div"] {
        let c0 = r.metrics[&format!("level 0.{key}")];
        let c1 = r.metrics[&format!("level 1.{key}")];
        ok &= c0.is_finite() && c1.is_finite() && c1 / c0 <= 1.5;
        parts.push(format!("{key} {c0:.3} -> {c1:.3}"));
    }
    verdict(10, ok, format!("{} {}", parts.join(", "), failures(&[r.clone()])));
}

#[test]
fn criterion_11_traces_and_recovery() {
    let mesh = agglomerate_pairs(&generate_cubic_mesh(2), 1);
    let reports = [check_traces(&mesh, 3), check_recovery(&mesh, 3, 1)];
    let worst = reports
        .iter()
        .flat_map(|r| r.metrics.iter())
        .filter(|(k, _)| !k.starts_with("max coupling"))
        .fold(0.0f64, |a, (_, &b)| a.max(b));
    let ok = reports.iter().all(|r| r.passed) && worst < 1e-9;
    verdict(11, ok, format!("worst identity residual {worst:.2e} on {} cells {}", mesh.num_cells(), failures(&reports)));
}

fn run_cli(args: &[&str], threads: usize) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_polyddr"))
        .args(args)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .expect("failed to run the binary");
    (out.status.code().unwrap_or(-1), out.stdout)
}

#[test]
fn criterion_12_determinism_across_thread_counts() {
    let dir = std::env::temp_dir().join(format!("polyddr-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let commands: Vec<Vec<String>> = vec![
        vec!["verify".into(), "--mesh".into(), "builtin:agglo:2:3".into(), "--degree".into(), "1".into(), "--levels".into(), "1,2".into()],
        vec!["converge".into(), "--degrees".into(), "0,1".into(), "--levels".into(), "1,2".into()],
        vec!["solve".into(), "--mesh".into(), "builtin:tet:1".into(), "--degree".into(), "1".into()],
    ];
    let mut bad = vec![];
    for (i, cmd) in commands.iter().enumerate() {
        let mut outputs = vec![];
        for threads in [1, 4] {
            let file = dir.join(format!("run{i}-{threads}.json"));
            let mut args: Vec<&str> = cmd.iter().map(String::as_str).collect();
            let file_s = file.to_string_lossy().to_string();
            args.extend(["--out", &file_s]);
            let (code, stdout) = run_cli(&args, threads);
            outputs.push((code, stdout, std::fs::read(&file).unwrap_or_default()));
        }
        if outputs[0] != outputs[1] || outputs[0].2.is_empty() {
            bad.push(cmd[0].clone());
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    verdict(12, bad.is_empty(), format!("verify, converge and solve byte-identical at 1 and 4 threads {}", bad.join(", ")));
}
