use anyhow::{bail, Context};
use rayon::prelude::*;

use meps_core::asymptotic::{s_of_e, sigma0_energy};
use meps_core::meps::min_entropy;
use meps_core::thermal::{bound_report, thermal_entropy_at_energy};
use meps_core::{
    beta_for_entropy, delta_max, meps_at_energy, meps_at_entropy, DiagonalState, PopulationVector,
    Spectrum,
};

use crate::table::{num, Table};
use crate::{
    as_count, parse_list, AsymptoticArgs, BoundsArgs, CliError, Family, MepsArgs, RegionArgs,
    ScalingArgs,
};

const ORDER_SLACK: f64 = 1e-12;

/// `n` evenly spaced points with both endpoints exact.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> anyhow::Result<Vec<f64>> {
    if n < 2 {
        bail!("--grid must be at least 2, got {n}");
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        bail!("bad range [{lo}, {hi}]");
    }
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

fn range(flag: &str, text: Option<&str>, default: (f64, f64)) -> anyhow::Result<(f64, f64)> {
    match text {
        Some(t) => {
            let [lo, hi] = parse_list(flag, t)?;
            Ok((lo, hi))
        }
        None => Ok(default),
    }
}

/// First index where `values` drops by more than the slack.
fn first_decrease(values: &[f64], scale: f64) -> Option<usize> {
    let slack = ORDER_SLACK * scale.max(1.0);
    values
        .windows(2)
        .position(|w| w[1] < w[0] - slack)
        .map(|i| i + 1)
}

pub(crate) fn meps(args: &MepsArgs) -> Result<Table, CliError> {
    if !(args.tol_s > 0.0) {
        return Err(anyhow::anyhow!("--tol-s must be positive").into());
    }
    let (spec, desc) = args.spectrum.build()?;
    if let Some(e_range) = &args.e_range {
        return meps_energy_grid(&spec, &desc, e_range, args.grid);
    }
    let (lo, hi) = range(
        "s-range",
        args.s_range.as_deref(),
        (0.0, spec.ln_dimension()),
    )?;
    let grid = linspace(lo, hi, args.grid)?;
    let mut t = Table::new(
        "meps",
        &[
            "s_target",
            "e_star",
            "k",
            "l",
            "lambda",
            "s_achieved",
            "plateau",
        ],
    );
    t.meta("spectrum", &desc);
    t.meta(
        "grid",
        format!("entropy {} points on [{lo}, {hi}]", args.grid),
    );
    t.meta("tol_s", args.tol_s);
    let sols = grid
        .par_iter()
        .map(|&s| meps_at_entropy(&spec, s))
        .collect::<Result<Vec<_>, _>>()?;
    for (s, sol) in grid.iter().zip(&sols) {
        let (k, l) = sol.counts();
        let plateau = (sol.entropy - s).abs() > args.tol_s;
        t.row(vec![
            num(*s),
            num(sol.energy),
            num(k),
            num(l),
            num(sol.lambda),
            num(sol.entropy),
            u8::from(plateau).to_string(),
        ]);
    }
    let energies: Vec<f64> = sols.iter().map(|m| m.energy).collect();
    if let Some(i) = first_decrease(&energies, spec.mean_energy() - spec.ground_energy()) {
        t.violation(format!("e_star decreases at row {i}"));
    }
    Ok(t)
}

fn meps_energy_grid(
    spec: &Spectrum,
    desc: &str,
    e_range: &str,
    n: usize,
) -> Result<Table, CliError> {
    let [lo, hi] = parse_list("e-range", e_range)?;
    let grid = linspace(lo, hi, n)?;
    let mut t = Table::new("meps", &["e_target", "s_star", "k", "l", "lambda"]);
    t.meta("spectrum", desc);
    t.meta("grid", format!("energy {n} points on [{lo}, {hi}]"));
    let sols = grid
        .par_iter()
        .map(|&e| meps_at_energy(spec, e))
        .collect::<Result<Vec<_>, _>>()?;
    for (e, sol) in grid.iter().zip(&sols) {
        let (k, l) = sol.counts();
        t.row(vec![
            num(*e),
            num(sol.entropy),
            num(k),
            num(l),
            num(sol.lambda),
        ]);
    }
    let entropies: Vec<f64> = sols.iter().map(|m| m.entropy).collect();
    if let Some(i) = first_decrease(&entropies, spec.ln_dimension()) {
        t.violation(format!("s_star decreases at row {i}"));
    }
    Ok(t)
}

pub(crate) fn region(args: &RegionArgs) -> Result<Table, CliError> {
    let (spec, desc) = if args.spectrum.is_empty() {
        (
            Spectrum::equally_spaced(4, 1.0)?,
            "equally-spaced d=4 gap=1".to_string(),
        )
    } else {
        args.spectrum.build()?
    };
    let full = (spec.ground_energy(), spec.mean_energy());
    let (lo, hi) = range("e-range", args.e_range.as_deref(), full)?;
    let grid = linspace(lo, hi, args.grid)?;
    let mut t = Table::new("region", &["energy", "s_thermal", "s_meps"]);
    t.meta("spectrum", &desc);
    t.meta(
        "grid",
        format!("energy {} points on [{lo}, {hi}]", args.grid),
    );
    let rows = grid
        .par_iter()
        .map(|&e| -> meps_core::Result<(f64, f64)> {
            Ok((thermal_entropy_at_energy(&spec, e)?, min_entropy(&spec, e)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (e, (upper, lower)) in grid.iter().zip(&rows) {
        t.row(vec![num(*e), num(*upper), num(*lower)]);
        if upper - lower < -1e-10 {
            t.violation(format!("s_thermal < s_meps at energy {e}"));
        }
    }
    let scale = spec.ln_dimension();
    let upper: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let lower: Vec<f64> = rows.iter().map(|r| r.1).collect();
    if let Some(i) = first_decrease(&upper, scale) {
        t.violation(format!("s_thermal decreases at row {i}"));
    }
    if let Some(i) = first_decrease(&lower, scale) {
        t.violation(format!("s_meps decreases at row {i}"));
    }
    for (e, (upper, lower)) in grid.iter().zip(&rows) {
        let endpoint = *e == full.0 || *e == full.1;
        if endpoint && (upper - lower).abs() > 1e-9 {
            t.violation(format!(
                "curves differ by {} at endpoint {e}",
                upper - lower
            ));
        }
    }
    Ok(t)
}

fn scaling_spectrum(family: Family, size: usize, gap: f64) -> meps_core::Result<Spectrum> {
    match family {
        Family::EquallySpaced => Spectrum::equally_spaced(size, gap),
        Family::Qubits => Spectrum::qubit_ensemble(size, gap),
    }
}

pub(crate) fn scaling(args: &ScalingArgs) -> Result<Table, CliError> {
    let sizes: Vec<usize> = match &args.sizes {
        Some(list) => list
            .split(',')
            .map(|p| {
                let x: f64 = p
                    .trim()
                    .parse()
                    .with_context(|| format!("--sizes: `{p}`"))?;
                as_count("sizes", x)
            })
            .collect::<anyhow::Result<_>>()?,
        None => match args.mode {
            Family::EquallySpaced => vec![50, 100, 200, 400],
            Family::Qubits => vec![10, 50, 100, 200],
        },
    };
    let [lo, hi] = parse_list("s-range", &args.s_range)?;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
        return Err(
            anyhow::anyhow!("--s-range is a fraction of ln d and must lie in [0, 1]").into(),
        );
    }
    if !(0.0..=1.0).contains(&args.inset) {
        return Err(anyhow::anyhow!("--inset must lie in [0, 1]").into());
    }
    let fractions = linspace(lo, hi, args.grid)?;
    let spectra = sizes
        .iter()
        .map(|&n| scaling_spectrum(args.mode, n, args.gap))
        .collect::<Result<Vec<_>, _>>()?;

    let mut t = Table::new(
        "scaling",
        &["dataset", "system_param", "s_over_lnd", "delta_over_lnd"],
    );
    t.meta("mode", args.mode);
    t.meta(
        "sizes",
        sizes
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    t.meta("gap", args.gap);
    t.meta(
        "grid",
        format!("S/ln d {} points on [{lo}, {hi}]", args.grid),
    );
    t.meta("inset", format!("S/ln d = {}", args.inset));

    let mut jobs: Vec<(&'static str, usize, f64)> = Vec::new();
    for i in 0..sizes.len() {
        jobs.extend(fractions.iter().map(|&x| ("curve", i, x)));
    }
    jobs.extend((0..sizes.len()).map(|i| ("inset", i, args.inset)));
    let values = jobs
        .par_iter()
        .map(|&(_, i, x)| {
            let ln_d = spectra[i].ln_dimension();
            delta_max(&spectra[i], x * ln_d).map(|dm| dm / ln_d)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (&(dataset, i, x), v) in jobs.iter().zip(&values) {
        t.row(vec![
            dataset.to_string(),
            sizes[i].to_string(),
            num(x),
            num(*v),
        ]);
        if *v < -1e-9 {
            t.violation(format!(
                "negative delta_max {v} for size {} at {x}",
                sizes[i]
            ));
        }
    }
    Ok(t)
}

pub(crate) fn bounds(args: &BoundsArgs) -> Result<Table, CliError> {
    let (spec, desc) = args.spectrum.build()?;
    let rho = PopulationVector::load(&spec, &args.state)?;
    if !(args.tol_root > 0.0) {
        return Err(anyhow::anyhow!("--tol-root must be positive").into());
    }
    let report = bound_report(&rho, args.beta)?;
    let beta_matched = beta_for_entropy(&spec, rho.entropy(), args.tol_root)?;

    let mut t = Table::new("bounds", &["quantity", "value"]);
    t.meta("spectrum", &desc);
    t.meta("state", args.state.display());
    t.meta("tol_root", args.tol_root);
    if let Some(b) = args.beta {
        t.meta("beta", b);
    }
    let mut push = |name: &str, v: f64| t.row(vec![name.to_string(), num(v)]);
    push("energy", report.energy);
    push("entropy", report.entropy);
    push("ergotropy", report.ergotropy);
    push("weight_lower", report.weight_lower);
    push("weight_upper", report.weight_upper);
    push("w_act", report.w_act);
    push("delta_max", report.delta_max);
    push("beta_matched", beta_matched);
    if let Some(b) = &report.bath {
        push("beta_bath", b.beta_bath);
        push("free_energy_gap", b.free_energy_gap);
        push("energy_gap", b.energy_gap);
        push("matched_free_energy", b.matched_free_energy);
        push("bath_free_energy", b.bath_free_energy);
        push("residual", b.residual());
    }
    for v in report.violations() {
        t.violation(v);
    }
    Ok(t)
}

pub(crate) fn asymptotic(args: &AsymptoticArgs) -> Result<Table, CliError> {
    let (model, levels, desc) = args.model()?;
    let top = sigma0_energy(&model, 1.0)?;
    if !(top > 0.0) {
        return Err(anyhow::anyhow!(
            "the band is too narrow for this density (E at lambda = 1 is {top})"
        )
        .into());
    }
    let (lo, hi) = range("e-range", args.e_range.as_deref(), (0.0, top))?;
    let grid = linspace(lo, hi, args.grid)?;
    let spec = if levels > 0 {
        Some(model.discretize(levels)?)
    } else {
        None
    };

    let mut header = vec!["energy", "lambda", "s_of_e"];
    if spec.is_some() {
        header.push("s_star");
    }
    let mut t = Table::new("asymptotic", &header);
    t.meta("model", &desc);
    t.meta(
        "grid",
        format!("energy {} points on [{lo}, {hi}]", args.grid),
    );
    if spec.is_some() {
        t.meta(
            "s_star",
            "exact solver on the discretization; empty above its mean energy",
        );
    }
    let rows = grid
        .par_iter()
        .map(|&e| -> meps_core::Result<(f64, Option<f64>)> {
            let s = s_of_e(&model, e)?;
            let exact = match &spec {
                Some(sp) if e <= sp.mean_energy() => Some(min_entropy(sp, e)?),
                _ => None,
            };
            Ok((s, exact))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (e, (s, exact)) in grid.iter().zip(&rows) {
        let mut row = vec![num(*e), num(e / top), num(*s)];
        if spec.is_some() {
            row.push(exact.map(num).unwrap_or_default());
        }
        t.row(row);
    }
    Ok(t)
}
