//! Implementations of the five subcommands.

use serde::Serialize;

use seqdisc_core::{
    build_equal_overlap, build_measurement, build_two_set, build_twoset_measurement,
    capacity_equal, capacity_two_rate, eve_success, exact_success, figure_data,
    intercept_resend_sim, plan_custom, plan_equal_split, reciprocal_closed_form, simulate_chain,
    usd, usd_twoset, AttackStats, CapacityResult, ChainPlan, ChainRunStats, ErasureChannelSpec,
    FigureGrid, FigureId, FigureTable, Matrix, RngStream, SymMatrix,
};

use crate::output::{self, sig12};
use crate::{CapacityArgs, ChainArgs, CliError, EveArgs, FiguresArgs, Format, VerifyUsdArgs};

// ---------------------------------------------------------------------------
// verify-usd
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EqualGridRecord {
    n: usize,
    s: f64,
    target_q: f64,
    #[serde(flatten)]
    residuals: usd::UsdValidation,
    pass: bool,
}

#[derive(Serialize)]
struct TwoSetGridRecord {
    n: usize,
    m: usize,
    s1: f64,
    s2: f64,
    target_q1: f64,
    target_q2: f64,
    #[serde(flatten)]
    residuals: usd_twoset::TwoSetValidation,
    /// Max gap between the closed-form and numerical failure spectra.
    spectrum_residual: f64,
    pass: bool,
}

#[derive(Serialize)]
struct InjectedRecord {
    n: usize,
    s: f64,
    c: f64,
    max_c: f64,
    min_eigenvalue: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    equal_grid: Vec<EqualGridRecord>,
    twoset_grid: Vec<TwoSetGridRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    injected: Option<InjectedRecord>,
    checked: usize,
    failures: usize,
}

pub fn verify_usd(args: &VerifyUsdArgs) -> Result<(), CliError> {
    if args.n_min < 2 || args.n_min > args.n_max {
        return Err(CliError::Usage(format!(
            "need 2 <= n-min <= n-max, got {}..{}",
            args.n_min, args.n_max
        )));
    }
    if args.s_step.is_nan() || args.s_step <= 0.0 || !(0.0..1.0).contains(&args.s_max) {
        return Err(CliError::Usage("need s-step > 0 and s-max in [0,1)".into()));
    }

    let mut equal_grid = Vec::new();
    for n in args.n_min..=args.n_max {
        let mut step = 0usize;
        loop {
            let s = (step as f64 * args.s_step).min(args.s_max);
            let family = build_equal_overlap(n, s)?;
            for target in [s, (1.0 + s) / 2.0, 1.0] {
                let meas = build_measurement(&family, target)?;
                let residuals = meas.validate();
                equal_grid.push(EqualGridRecord {
                    n,
                    s,
                    target_q: target,
                    residuals,
                    pass: residuals.is_valid(),
                });
            }
            step += 1;
            if step as f64 * args.s_step > args.s_max + 1e-12 {
                break;
            }
        }
    }

    let mut rng = RngStream::from_seed(args.seed);
    let mut twoset_grid = Vec::new();
    for _ in 0..args.twoset_points {
        let n = 3 + (rng.next_u64() % 5) as usize;
        let m = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
        let s1 = 0.9 * rng.next_f64();
        let s2 = 0.9 * rng.next_f64();
        let q1 = s1 * s1 + (1.0 - s1 * s1) * rng.next_f64();
        let q2 = s2 * s2 + (1.0 - s2 * s2) * rng.next_f64();
        let family = build_two_set(n, m, s1, s2)?;
        let meas = build_twoset_measurement(&family, q1, q2)?;
        let residuals = meas.validate();
        let report = seqdisc_core::positivity_check(n, m, s1, s2, meas.c1(), meas.c2())?;
        let spectrum_residual = report
            .analytic_spectrum
            .iter()
            .zip(&report.eta_basis_spectrum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        twoset_grid.push(TwoSetGridRecord {
            n,
            m,
            s1,
            s2,
            target_q1: q1,
            target_q2: q2,
            residuals,
            spectrum_residual,
            pass: residuals.is_valid() && spectrum_residual <= 1e-9,
        });
    }

    let injected = if args.inject_violation {
        // a detection constant 5% above the bound must break positivity
        let (n, s) = (3usize, 0.5f64);
        let family = build_equal_overlap(n, s)?;
        let c = 1.05 * usd::max_c(n, s)?;
        let reciprocal = reciprocal_closed_form(&family)?;
        let mut sum = Matrix::zeros(n, n);
        for perp in reciprocal.vectors() {
            sum.add_assign(&Matrix::outer(perp, perp).scaled(c));
        }
        let pi0 = SymMatrix::symmetrized(&Matrix::identity(n).sub(&sum))?;
        let check = pi0.is_psd(1e-10)?;
        Some(InjectedRecord {
            n,
            s,
            c,
            max_c: usd::max_c(n, s)?,
            min_eigenvalue: check.min_eigenvalue,
            pass: check.is_psd,
        })
    } else {
        None
    };

    if let Some(dir) = &args.dump_fixtures {
        dump_fixtures(dir)?;
    }

    let checked = equal_grid.len() + twoset_grid.len() + usize::from(injected.is_some());
    let failures = equal_grid.iter().filter(|r| !r.pass).count()
        + twoset_grid.iter().filter(|r| !r.pass).count()
        + usize::from(injected.as_ref().is_some_and(|r| !r.pass));
    let report = VerifyReport {
        equal_grid,
        twoset_grid,
        injected,
        checked,
        failures,
    };

    let document = output::json_document(args, Some(args.seed), &report);
    output::emit(args.output.as_deref(), &document, args, Some(args.seed))?;
    println!(
        "verify-usd: {checked} grid points, {failures} failures, seed={}{}",
        args.seed,
        target_note(&args.output)
    );
    if failures > 0 {
        return Err(CliError::InvariantFailure(format!(
            "{failures} of {checked} grid points failed"
        )));
    }
    Ok(())
}

/// Writes a canonical, replayable set of family and measurement fixtures.
fn dump_fixtures(dir: &std::path::Path) -> Result<(), CliError> {
    fn write<T: Serialize>(dir: &std::path::Path, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("fixture serializes");
        text.push('\n');
        std::fs::write(dir.join(name), text)?;
        Ok(())
    }

    std::fs::create_dir_all(dir)?;
    let equal = build_equal_overlap(3, 0.25)?;
    write(dir, "family_equal_n3_s0.25.json", &equal)?;
    write(
        dir,
        "usd_equal_n3_s0.25_q0.5.json",
        &build_measurement(&equal, 0.5)?,
    )?;
    let twoset = build_two_set(4, 2, 0.6, 0.3)?;
    write(dir, "family_twoset_n4_m2_s0.6_s0.3.json", &twoset)?;
    write(
        dir,
        "usd_twoset_n4_m2_q0.6_q0.3.json",
        &build_twoset_measurement(&twoset, 0.6, 0.3)?,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// chain
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ChainData {
    plan: ChainPlan,
    exact_success: f64,
    stats: ChainRunStats,
}

pub fn chain(args: &ChainArgs) -> Result<(), CliError> {
    let plan = match &args.overlaps {
        Some(ladder) => plan_custom(args.n, args.s, ladder)?,
        None => plan_equal_split(args.n, args.s, args.observers)?,
    };
    let stats = simulate_chain(&plan, args.weights.as_deref(), args.trials, args.seed)?;
    let exact = exact_success(&plan);

    let document = match args.format {
        Format::Json => {
            let data = ChainData {
                plan: plan.clone(),
                exact_success: exact,
                stats: stats.clone(),
            };
            output::json_document(args, Some(args.seed), &data)
        }
        Format::Csv => {
            let mut rows: Vec<String> = plan
                .stage_failures()
                .iter()
                .enumerate()
                .map(|(stage, q)| {
                    format!(
                        "{},{},{},{},{}",
                        stage + 1,
                        stats.per_stage_success[stage],
                        stats.trials,
                        sig12(stats.stage_success_rate(stage)),
                        sig12(1.0 - q)
                    )
                })
                .collect();
            rows.push(format!(
                "all,{},{},{},{}",
                stats.all_success,
                stats.trials,
                sig12(stats.all_success_rate()),
                sig12(exact)
            ));
            output::csv_document(
                args,
                Some(args.seed),
                "stage,successes,trials,empirical_rate,exact_rate",
                &rows,
            )
        }
    };
    output::emit(args.output.as_deref(), &document, args, Some(args.seed))?;
    println!(
        "chain: all-success {:.6} (exact {:.6}), {} mislabels, seed={}{}",
        stats.all_success_rate(),
        exact,
        stats.mislabels,
        args.seed,
        target_note(&args.output)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// capacity
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CapacityData {
    spec: ErasureChannelSpec,
    result: CapacityResult,
    /// `(1-q)·log2 N`, listed when the two rates coincide.
    #[serde(skip_serializing_if = "Option::is_none")]
    equal_rate_reference: Option<f64>,
}

pub fn capacity(args: &CapacityArgs) -> Result<(), CliError> {
    let spec = ErasureChannelSpec::new(args.n, args.m_split, args.q1, args.q2)?;
    let result = capacity_two_rate(&spec)?;
    let equal_rate_reference = if args.q1 == args.q2 {
        Some(capacity_equal(args.n, args.q1)?)
    } else {
        None
    };
    let data = CapacityData {
        spec,
        result,
        equal_rate_reference,
    };

    let document = match args.format {
        Format::Json => output::json_document(args, Some(args.seed), &data),
        Format::Csv => output::csv_document(
            args,
            Some(args.seed),
            "n,m,q1,q2,capacity_bits,optimal_p1",
            &[format!(
                "{},{},{},{},{},{}",
                args.n,
                args.m_split,
                sig12(args.q1),
                sig12(args.q2),
                sig12(result.capacity_bits),
                sig12(result.optimal_p1)
            )],
        ),
    };
    output::emit(args.output.as_deref(), &document, args, Some(args.seed))?;
    println!(
        "capacity: {:.9} bits at p1={:.6} (n={}, m={}, q1={}, q2={}), seed={}{}",
        result.capacity_bits,
        result.optimal_p1,
        args.n,
        args.m_split,
        args.q1,
        args.q2,
        args.seed,
        target_note(&args.output)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EveData {
    plan: ChainPlan,
    link: Option<usize>,
    /// Closed-form success probability at the tapped link's overlap.
    closed_form_success: Option<f64>,
    stats: AttackStats,
}

pub fn eve(args: &EveArgs) -> Result<(), CliError> {
    let plan = plan_equal_split(args.n, args.s, args.observers)?;
    let link = if args.no_eve { None } else { Some(args.link) };
    let stats = intercept_resend_sim(&plan, link, args.trials, args.seed)?;
    let closed_form_success = match link {
        None => None,
        Some(l) => Some(eve_success(args.n, plan.overlaps()[l])?),
    };
    let data = EveData {
        plan: plan.clone(),
        link,
        closed_form_success,
        stats: stats.clone(),
    };

    let document = match args.format {
        Format::Json => output::json_document(args, Some(args.seed), &data),
        Format::Csv => {
            let rows: Vec<String> = (0..plan.observers())
                .map(|stage| {
                    format!(
                        "{},{},{},{},{},{}",
                        stage + 1,
                        stats.stage_conclusive[stage],
                        stats.stage_errors[stage],
                        stats.trials,
                        sig12(stats.stage_conclusive_exact[stage]),
                        sig12(stats.stage_error_exact[stage])
                    )
                })
                .collect();
            output::csv_document(
                args,
                Some(args.seed),
                "stage,conclusive,errors,trials,conclusive_exact,error_exact",
                &rows,
            )
        }
    };
    output::emit(args.output.as_deref(), &document, args, Some(args.seed))?;

    let downstream_errors: u64 = stats.total_errors();
    match link {
        Some(_) => println!(
            "eve: success {:.6} (exact {:.6}), downstream errors {} in {} trials, seed={}{}",
            stats.eve_success_rate(),
            stats.eve_success_exact,
            downstream_errors,
            stats.trials,
            args.seed,
            target_note(&args.output)
        ),
        None => println!(
            "eve: control run, downstream errors {} in {} trials, seed={}{}",
            downstream_errors,
            stats.trials,
            args.seed,
            target_note(&args.output)
        ),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// figures
// ---------------------------------------------------------------------------

pub fn figures(args: &FiguresArgs) -> Result<(), CliError> {
    let figure: FigureId = args.figure.parse()?;
    let mut grid = FigureGrid {
        fig2_points: args.points,
        fig3_points: args.points,
        fig1_q1: args.q1,
        fig2_q1: args.q1,
        ..FigureGrid::default()
    };
    if let Some(n) = args.n {
        grid.fig1_n = n;
        grid.fig2_n = n;
    }
    if let Some(q2) = &args.q2_values {
        grid.fig1_q2 = q2.clone();
    }
    if let Some(m) = &args.m_values {
        grid.fig2_m = m.clone();
    }
    if let Some(n) = &args.n_values {
        grid.fig3_n = n.clone();
    }

    let table: FigureTable = figure_data(figure, &grid)?;
    let document = match args.format {
        Format::Json => output::json_document(args, Some(args.seed), &table),
        Format::Csv => {
            let header = format!("{},series,{}", table.x_label, table.value_label);
            let rows: Vec<String> = table
                .rows
                .iter()
                .map(|r| format!("{},{},{}", sig12(r.x), r.series, sig12(r.value)))
                .collect();
            output::csv_document(args, Some(args.seed), &header, &rows)
        }
    };
    output::emit(args.output.as_deref(), &document, args, Some(args.seed))?;
    println!(
        "figures {}: {} rows, seed={}{}",
        figure,
        table.rows.len(),
        args.seed,
        target_note(&args.output)
    );
    Ok(())
}

fn target_note(output: &Option<std::path::PathBuf>) -> String {
    match output {
        Some(path) => format!(" -> {}", path.display()),
        None => String::new(),
    }
}
