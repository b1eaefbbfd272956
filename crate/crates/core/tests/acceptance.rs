//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use regnear::experiment::{distances, distances_csv, run_table, ExperimentConfig, TableResult};
use regnear::linalg::vector::{norm2, relative_difference, sub};
use regnear::linalg::{min_norm_lstsq_solve, thin_qr, Cholesky, DenseMatrix};
use regnear::nearness::{
    build_projector, nearest_symmetric_with_nullspace, nearest_with_nullspace, NullSpaceBasis,
};
use regnear::problems::ProblemKind;
use regnear::regops::{
    make_projector_closed, make_regularization_matrix, NullSpaceKind, RegularizerKind,
    RegularizerName,
};
use regnear::solver::{tikhonov_direct_oracle, Rrgmres, StopReason};
use regnear::transform::{Reduction, StandardFormContext};
use regnear::{frobenius_inner, LinearOperator};

type M = DenseMatrix<f64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
    M::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [10, 100, 200] {
        let p1 = make_projector_closed::<f64>(NullSpaceKind::N1, n).unwrap();
        for delta in [1.0, 0.1] {
            let l = make_regularization_matrix(RegularizerKind::L1Delta { delta }, n).unwrap();
            let d = (&l - &l.matmul(p1.matrix())).frobenius_norm();
            worst = worst.max(rel(d, delta / (2.0 * (n as f64).sqrt())));
        }
        let l2t = make_regularization_matrix::<f64>(RegularizerKind::L2Tilde, n).unwrap();
        let l20 = make_regularization_matrix::<f64>(RegularizerKind::L2Zero, n).unwrap();
        worst = worst.max(rel((&l2t - &l20).frobenius_norm(), 10f64.sqrt() / 4.0));
    }
    outcome(
        worst <= 1e-12,
        format!("max relative deviation {worst:.2e} (tol 1e-12)"),
    )
}

fn criterion_2() -> Outcome {
    let target = 10f64.sqrt() / 4.0;
    let mut failures = Vec::new();
    for n in 4..=400 {
        let (d20, dplp, dlp) = distances(n).unwrap();
        if !(dlp < dplp && dplp < target && rel(d20, target) < 1e-12) {
            failures.push(n);
        }
    }
    outcome(
        failures.is_empty(),
        format!("n=4..400, violations at {failures:?}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_inner: f64 = 0.0;
    let mut closer = 0usize;
    let mut checked = 0usize;
    for instance in 0..50 {
        let symmetric = instance % 2 == 1;
        let ell = 1 + instance % 4 / 2;
        let n = rng.random_range(ell + 1..=8);
        let p = if symmetric {
            n
        } else {
            rng.random_range(1..=8)
        };
        let basis = NullSpaceBasis::from_spanning(gaussian(&mut rng, n, ell)).unwrap();
        let proj = build_projector(basis.matrix(), true).unwrap().into_matrix();
        let a = if symmetric {
            let g = gaussian(&mut rng, n, n);
            M::from_fn(n, n, |i, j| g[(i, j)] + g[(j, i)])
        } else {
            gaussian(&mut rng, p, n)
        };
        let ahat = if symmetric {
            nearest_symmetric_with_nullspace(&a, &basis).unwrap()
        } else {
            nearest_with_nullspace(&a, &basis).unwrap()
        };
        let diff = &a - &ahat;
        let dist = diff.frobenius_norm();
        for _ in 0..100 {
            let b = if symmetric {
                let g = gaussian(&mut rng, n, n);
                let s = M::from_fn(n, n, |i, j| g[(i, j)] + g[(j, i)]);
                proj.matmul(&s).matmul(&proj)
            } else {
                gaussian(&mut rng, p, n).matmul(&proj)
            };
            let inner = frobenius_inner(&diff, &b).unwrap().abs()
                / (dist * b.frobenius_norm()).max(f64::MIN_POSITIVE);
            worst_inner = worst_inner.max(inner);
            if dist > (&a - &b).frobenius_norm() {
                closer += 1;
            }
            checked += 1;
        }
    }
    outcome(
        worst_inner <= 1e-9 && closer == 0,
        format!("{checked} feasible B, max relative <A-Â,B> {worst_inner:.2e} (tol 1e-9), {closer} closer than Â"),
    )
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [3, 10, 100, 200] {
        let closed = make_projector_closed::<f64>(NullSpaceKind::N2, n).unwrap();
        let v = M::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 });
        let built = build_projector(&v, false).unwrap();
        worst = worst.max(closed.matrix().max_abs_diff(built.matrix()));
    }
    outcome(
        worst <= 1e-12,
        format!("max entrywise difference {worst:.2e} (tol 1e-12)"),
    )
}

fn dense(op: &dyn LinearOperator<f64>) -> M {
    let n = op.ncols();
    let mut m = M::zeros(op.nrows(), n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        m.set_column(j, &op.apply(&e));
    }
    m
}

fn criterion_5() -> Outcome {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (u, _) = thin_qr(&gaussian(&mut rng, n, n)).unwrap();
    let (w, _) = thin_qr(&gaussian(&mut rng, n, n)).unwrap();
    // singular values from 1 down to 1e-8
    let sigma = M::from_fn(n, n, |i, j| {
        if i == j {
            10f64.powf(-8.0 * i as f64 / (n - 1) as f64)
        } else {
            0.0
        }
    });
    let k = u.matmul(&sigma).matmul(&w.transpose());
    let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let names = [
        RegularizerName::L1dP1,
        RegularizerName::L2tP2,
        RegularizerName::P2L2tP2,
        RegularizerName::L10,
        RegularizerName::L20,
    ];
    let mut worst: f64 = 0.0;
    for name in names {
        let reg = name.build(n, 1.0).unwrap();
        let ctx =
            StandardFormContext::prepare_with(&k, &b, &reg, Reduction::Pseudoinverse).unwrap();
        let k2 = dense(&ctx);
        let l = reg.effective_matrix();
        for mu in [1e-4, 1e-2, 1.0] {
            let mut normal = k2.tr_matmul(&k2);
            for i in 0..n {
                normal[(i, i)] += mu;
            }
            let z = Cholesky::new(&normal)
                .unwrap()
                .solve(&k2.tr_matvec(ctx.b1()))
                .unwrap();
            let x = ctx.back_transform(&z).unwrap();
            let oracle = tikhonov_direct_oracle(&k, &l, &b, mu).unwrap();
            worst = worst.max(relative_difference(&x, &oracle));
        }
    }
    outcome(
        worst <= 1e-7,
        format!("max relative difference {worst:.2e} (tol 1e-7), pseudoinverse reduction"),
    )
}

fn criterion_6(tables: &[&TableResult]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_oracle: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut nonmonotone = 0usize;
    for n in [6, 10, 15] {
        for _ in 0..5 {
            let a = gaussian(&mut rng, n, n);
            let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let mut run = Rrgmres::start(&a, &b, 1e-14).unwrap();
            let mut last = norm2(&b);
            for k in 1..=5 {
                run.step().unwrap();
                // x_k from the power basis A·b, …, A^k·b by dense least squares
                let mut cols = vec![a.matvec(&b)];
                for _ in 1..k {
                    cols.push(a.matvec(cols.last().unwrap()));
                }
                let kr = M::from_columns(n, &cols);
                let c = min_norm_lstsq_solve(&a.matmul(&kr), &b).unwrap();
                let oracle = kr.matvec(&c);
                let z = run.iterate();
                worst_oracle = worst_oracle.max(relative_difference(&z, &oracle));
                let explicit = norm2(&sub(&a.matvec(&z), &b));
                worst_res = worst_res.max((run.residual() - explicit).abs() / norm2(&b));
                if run.residual() > last * (1.0 + 1e-12) {
                    nonmonotone += 1;
                }
                last = run.residual();
            }
        }
    }
    // transformed test problems: every iteration against ‖K₂z − b₁‖
    for (problem, name) in [
        (ProblemKind::Phillips, RegularizerName::L1dP1),
        (ProblemKind::Deriv2, RegularizerName::P2L2tP2),
    ] {
        let p = regnear::problems::add_noise(&problem.build::<f64>(100).unwrap(), 1e-4, 1).unwrap();
        let reg = name.build(100, 1.0).unwrap();
        let ctx = StandardFormContext::prepare(&p.k, &p.b, &reg).unwrap();
        let b1 = ctx.b1().to_vec();
        let mut run = Rrgmres::start(&ctx, &b1, 1e-14).unwrap();
        for _ in 0..20 {
            if !run.step().unwrap() {
                break;
            }
            let z = run.iterate();
            let explicit = norm2(&sub(&ctx.apply(&z), &b1));
            worst_res = worst_res.max((run.residual() - explicit).abs() / norm2(&b1));
        }
    }
    let mut runs = 0;
    for table in tables {
        for entry in &table.entries {
            if let Ok(r) = &entry.outcome {
                runs += 1;
                if r.log
                    .records
                    .windows(2)
                    .any(|w| w[1].residual > w[0].residual * (1.0 + 1e-12))
                {
                    nonmonotone += 1;
                }
            }
        }
    }
    outcome(
        worst_oracle <= 1e-8 && worst_res <= 1e-8 && nonmonotone == 0,
        format!(
            "Krylov oracle {worst_oracle:.2e} (tol 1e-8), residual gap {worst_res:.2e}·‖b₁‖ (tol 1e-8), \
             {nonmonotone} non-monotone of {} runs",
            runs + 15
        ),
    )
}

fn median_of(table: &TableResult, nu: f64, reg: RegularizerName) -> (f64, f64) {
    let s = table.summary(nu, reg);
    (s.median_relative_error, s.median_iterations)
}

fn criterion_7(table: &TableResult) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (nu, reference_k) in [(1e-2, 4.0), (1e-3, 9.0), (1e-4, 10.0)] {
        let (e_i, k_i) = median_of(table, nu, RegularizerName::Identity);
        let (e_l, _) = median_of(table, nu, RegularizerName::L1dP1);
        ok &= e_l < e_i && (k_i - reference_k).abs() <= 3.0;
        parts.push(format!(
            "nu={nu:e}: L1dP1 {e_l:.2e} vs I {e_i:.2e}, k(I)={k_i} (reference {reference_k} ± 3)"
        ));
        if nu == 1e-4 {
            ok &= (5e-4..=8e-3).contains(&e_l) && (2e-3..=2e-2).contains(&e_i);
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion_8(table: &TableResult) -> Outcome {
    let (e_p, _) = median_of(table, 1e-4, RegularizerName::P2L2tP2);
    let (e_i, _) = median_of(table, 1e-4, RegularizerName::Identity);
    let a = e_p <= 1e-3 && e_p <= e_i / 10.0;
    let seeds = table.cell(1e-2, RegularizerName::Identity).count();
    let zero_runs: Vec<(RegularizerName, usize)> = [RegularizerName::L2tP2, RegularizerName::P2L2tP2, RegularizerName::L20]
        .into_iter()
        .map(|reg| {
            let zeros = table
                .cell(1e-2, reg)
                .filter(|e| matches!(&e.outcome, Ok(r) if r.iterations == 0 && r.stop_reason == StopReason::InitialResidualOk))
                .count();
            (reg, zeros)
        })
        .collect();
    let b = zero_runs.iter().any(|&(_, z)| 2 * z > seeds);
    let zeros: Vec<String> = zero_runs
        .iter()
        .map(|(r, z)| format!("{r} {z}/{seeds}"))
        .collect();
    outcome(
        a && b,
        format!(
            "nu=1e-4: P2L2tP2 {e_p:.2e} vs I {e_i:.2e}; nu=1e-2 k=0 stops: {}",
            zeros.join(", ")
        ),
    )
}

fn criterion_9(table: &TableResult) -> Outcome {
    let mut bad = 0;
    let mut count = 0;
    let mut sample = String::new();
    for entry in &table.entries {
        if entry.regularizer != RegularizerName::L1dP1 {
            continue;
        }
        let Ok(r) = &entry.outcome else {
            bad += 1;
            continue;
        };
        count += 1;
        if r.matvecs != r.iterations + 3
            || r.matvecs_nullspace + r.matvecs_arnoldi + r.matvecs_back != r.matvecs
        {
            bad += 1;
        }
        if sample.is_empty() {
            sample = format!(
                "e.g. k={}: {} = ell {} + (k+1) {} + back {}",
                r.iterations, r.matvecs, r.matvecs_nullspace, r.matvecs_arnoldi, r.matvecs_back
            );
        }
    }
    outcome(
        bad == 0 && count > 0,
        format!("{count} L1dP1 runs, {bad} mismatches; {sample}"),
    )
}

fn criterion_10(table: &TableResult, cfg: &ExperimentConfig) -> Outcome {
    let again = run_table(cfg).unwrap();
    let same_table = table.to_csv() == again.to_csv();
    let same_dist = distances_csv(4, 60, 7).unwrap() == distances_csv(4, 60, 7).unwrap();
    let small = ExperimentConfig {
        n: 50,
        seeds: vec![1, 2],
        ..ExperimentConfig::default()
    };
    let same_small = run_table(&small).unwrap().to_csv() == run_table(&small).unwrap().to_csv();
    outcome(
        same_table && same_dist && same_small,
        format!("table {same_table}, distances {same_dist}, small table {same_small}"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let phillips_cfg = ExperimentConfig {
        problem: ProblemKind::Phillips,
        ..ExperimentConfig::default()
    };
    let deriv2_cfg = ExperimentConfig {
        problem: ProblemKind::Deriv2,
        ..ExperimentConfig::default()
    };
    let t = Instant::now();
    let phillips = run_table(&phillips_cfg).unwrap();
    let t_phillips = t.elapsed();
    let t = Instant::now();
    let deriv2 = run_table(&deriv2_cfg).unwrap();
    let t_deriv2 = t.elapsed();
    println!(
        "phillips table {:.2?}, deriv2 table {:.2?}",
        t_phillips, t_deriv2
    );

    let results = [
        ("closed-form distances", criterion_1()),
        ("distance ordering", criterion_2()),
        ("nearness optimality", criterion_3()),
        ("projector closed forms", criterion_4()),
        ("transformation equivalence", criterion_5()),
        ("RRGMRES correctness", criterion_6(&[&phillips, &deriv2])),
        ("phillips table bands", criterion_7(&phillips)),
        ("deriv2 table bands", criterion_8(&deriv2)),
        ("matvec accounting", criterion_9(&phillips)),
        ("determinism", criterion_10(&phillips, &phillips_cfg)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "{} criterion {:2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed in {:.2?}",
        results.len() - failed,
        results.len(),
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
