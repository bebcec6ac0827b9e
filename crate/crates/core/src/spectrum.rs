//! Hamiltonian spectra as sorted energy shells with log-domain prefix tables.
//!
//! A shell groups all levels sharing one energy. Degeneracies are real
//! weights so that exact many-body shells (binomial counts) and discretized
//! continuum densities of states share one representation. Counts are kept
//! as logarithms, which keeps flat-state energies and entropies finite for
//! dimensions such as `2^200` or `e^100`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sub_exp, log_sum_exp, LogAccumulator};

/// Largest integer degeneracy tracked exactly (2^53).
const MAX_EXACT: f64 = 9_007_199_254_740_992.0;

/// Largest total dimension that [`Spectrum::levels`] will expand.
pub const MAX_DENSE_DIMENSION: usize = 1_000_000;

/// How cut points inside a degenerate shell are counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountModel {
    /// Shells hold whole levels; a flat state covers an integer number of them.
    Discrete,
    /// Shells are weights of a continuous density; any real count is allowed.
    Continuum,
}

#[derive(Debug)]
struct Tables {
    energies: Vec<f64>,
    /// Energies relative to the ground shell.
    excitations: Vec<f64>,
    ln_degeneracy: Vec<f64>,
    exact_degeneracy: Vec<Option<u64>>,
    /// `ln N_j` with `N_j` the number of levels in shells `0..=j`.
    ln_cum_count: Vec<f64>,
    /// `ln Σ_{i<=j} g_i (e_i - e_0)`; `-inf` while the sum is zero.
    ln_cum_weight: Vec<f64>,
    model: CountModel,
}

/// An immutable, cheaply clonable spectrum.
#[derive(Clone, Debug)]
pub struct Spectrum {
    inner: Arc<Tables>,
}

/// A flat-state cut: the lowest `N_{shell-1} + frac * g_shell` levels.
///
/// `frac = 1` is the shell boundary. Cuts order by level count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPoint {
    pub shell: usize,
    pub frac: f64,
}

impl CutPoint {
    pub fn new(shell: usize, frac: f64) -> Self {
        Self { shell, frac }
    }

    /// Cut at the upper edge of `shell`.
    pub fn shell_end(shell: usize) -> Self {
        Self { shell, frac: 1.0 }
    }

    /// Rewrites `frac = 0` as the end of the previous shell.
    pub fn normalized(self) -> Self {
        if self.frac <= 0.0 && self.shell > 0 {
            Self::shell_end(self.shell - 1)
        } else {
            self
        }
    }

    /// Lexicographic key used for deterministic tie-breaking.
    pub fn order_key(&self) -> (usize, f64) {
        let n = self.normalized();
        (n.shell, n.frac)
    }
}

struct ShellInput {
    energy: f64,
    ln_degeneracy: f64,
    exact: Option<u64>,
}

impl Spectrum {
    /// Builds a spectrum from `(energy, degeneracy)` pairs in any order.
    ///
    /// Equal energies are merged. The count model is discrete when every
    /// degeneracy is a whole number.
    pub fn from_shells(shells: &[(f64, f64)]) -> Result<Self> {
        let mut inputs = Vec::with_capacity(shells.len());
        for &(energy, g) in shells {
            if !energy.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite energy {energy}"
                )));
            }
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "degeneracy must be positive, got {g} at energy {energy}"
                )));
            }
            inputs.push(ShellInput {
                energy,
                ln_degeneracy: g.ln(),
                exact: exact_integer(g),
            });
        }
        let discrete = shells.iter().all(|&(_, g)| g.fract() == 0.0);
        let model = if discrete {
            CountModel::Discrete
        } else {
            CountModel::Continuum
        };
        Self::build(inputs, model)
    }

    /// Builds a spectrum from individual level energies (degeneracy one each).
    pub fn from_levels(levels: &[f64]) -> Result<Self> {
        let shells: Vec<(f64, f64)> = levels.iter().map(|&e| (e, 1.0)).collect();
        Self::from_shells(&shells)
    }

    fn build(mut inputs: Vec<ShellInput>, model: CountModel) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidParameter("spectrum has no shells".into()));
        }
        inputs.sort_by(|a, b| a.energy.total_cmp(&b.energy));

        let mut merged: Vec<ShellInput> = Vec::with_capacity(inputs.len());
        for s in inputs {
            match merged.last_mut() {
                Some(last) if last.energy == s.energy => {
                    last.ln_degeneracy = log_add_exp(last.ln_degeneracy, s.ln_degeneracy);
                    last.exact = match (last.exact, s.exact) {
                        (Some(a), Some(b)) => exact_integer(a as f64 + b as f64),
                        _ => None,
                    };
                }
                _ => merged.push(s),
            }
        }
        if merged[0].ln_degeneracy < 0.0 {
            return Err(Error::InvalidParameter(
                "ground shell must hold at least one level".into(),
            ));
        }

        let ground = merged[0].energy;
        let m = merged.len();
        let mut t = Tables {
            energies: Vec::with_capacity(m),
            excitations: Vec::with_capacity(m),
            ln_degeneracy: Vec::with_capacity(m),
            exact_degeneracy: Vec::with_capacity(m),
            ln_cum_count: Vec::with_capacity(m),
            ln_cum_weight: Vec::with_capacity(m),
            model,
        };
        let mut counts = LogAccumulator::new();
        let mut weights = LogAccumulator::new();
        for s in merged {
            let eps = s.energy - ground;
            counts.add_ln(s.ln_degeneracy);
            if eps > 0.0 {
                weights.add_ln(s.ln_degeneracy + eps.ln());
            }
            t.energies.push(s.energy);
            t.excitations.push(eps);
            t.ln_degeneracy.push(s.ln_degeneracy);
            t.exact_degeneracy.push(s.exact);
            t.ln_cum_count.push(counts.ln_total());
            t.ln_cum_weight.push(weights.ln_total());
        }
        Ok(Self { inner: Arc::new(t) })
    }

    /// `d` levels at `0, gap, 2 gap, ...`.
    pub fn equally_spaced(d: usize, gap: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("need d >= 2, got {d}")));
        }
        if !(gap.is_finite() && gap > 0.0) {
            return Err(Error::InvalidParameter(format!("need gap > 0, got {gap}")));
        }
        let levels: Vec<f64> = (0..d).map(|k| k as f64 * gap).collect();
        Self::from_levels(&levels)
    }

    /// `n` non-interacting two-level systems: shell `k` at `k * splitting`
    /// with degeneracy `C(n, k)`.
    pub fn qubit_ensemble(n: usize, splitting: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("need at least one qubit".into()));
        }
        if !(splitting.is_finite() && splitting > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need splitting > 0, got {splitting}"
            )));
        }
        let shells = (0..=n)
            .map(|k| ShellInput {
                energy: k as f64 * splitting,
                ln_degeneracy: ln_binomial(n as u64, k as u64),
                exact: exact_binomial(n as u64, k as u64),
            })
            .collect();
        Self::build(shells, CountModel::Discrete)
    }

    /// Discretized density `g_E = c E^a` on `(0, e_max]` plus a
    /// non-degenerate ground level at zero.
    pub fn polynomial_dos(a: f64, c: f64, e_max: f64, levels: usize) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParameter(format!("need a >= 0, got {a}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("need c > 0, got {c}")));
        }
        check_dos_grid(e_max, levels)?;
        let p = 1.0 + a;
        let ln_prefactor = (c / p).ln();
        let mut shells = vec![ShellInput {
            energy: 0.0,
            ln_degeneracy: 0.0,
            exact: Some(1),
        }];
        for j in 1..=levels {
            let e = j as f64 * e_max / levels as f64;
            // N(E_j) - N(E_{j-1}) = N(E_j) (1 - (E_{j-1}/E_j)^p)
            let ratio_ln = p * ((j - 1) as f64 / j as f64).ln();
            let ln_w = ln_prefactor + p * e.ln() + (-ratio_ln.exp_m1()).ln();
            if !ln_w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-monotone level count at shell {j}"
                )));
            }
            shells.push(ShellInput {
                energy: e,
                ln_degeneracy: ln_w,
                exact: None,
            });
        }
        Self::build(shells, CountModel::Continuum)
    }

    /// Discretized density `g_E = e^{b E}` on `(0, e_max]` plus a
    /// non-degenerate ground level at zero.
    pub fn exponential_dos(b: f64, e_max: f64, levels: usize) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter(format!("need b > 0, got {b}")));
        }
        check_dos_grid(e_max, levels)?;
        let width = e_max / levels as f64;
        // (e^{b E_j} - e^{b E_{j-1}}) / b = e^{b E_j} (1 - e^{-b width}) / b
        let ln_tail = (-(-b * width).exp_m1()).ln() - b.ln();
        let mut shells = vec![ShellInput {
            energy: 0.0,
            ln_degeneracy: 0.0,
            exact: Some(1),
        }];
        for j in 1..=levels {
            let e = j as f64 * width;
            let ln_w = b * e + ln_tail;
            if !ln_w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-monotone level count at shell {j}"
                )));
            }
            shells.push(ShellInput {
                energy: e,
                ln_degeneracy: ln_w,
                exact: None,
            });
        }
        Self::build(shells, CountModel::Continuum)
    }

    /// Reads a spectrum file: one `energy degeneracy` pair per line, `#`
    /// comments and blank lines ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses spectrum text; `origin` only labels error messages.
    pub fn parse(text: &str, origin: impl AsRef<Path>) -> Result<Self> {
        let origin = origin.as_ref();
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut shells = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(
                    i + 1,
                    format!(
                        "expected `energy degeneracy`, found {} fields",
                        fields.len()
                    ),
                ));
            }
            let energy: f64 = fields[0]
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad energy `{}`", fields[0])))?;
            let g: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad degeneracy `{}`", fields[1])))?;
            if !energy.is_finite() {
                return Err(parse_err(
                    i + 1,
                    format!("non-finite energy `{}`", fields[0]),
                ));
            }
            if !(g.is_finite() && g > 0.0) {
                return Err(parse_err(
                    i + 1,
                    format!("degeneracy must be positive, got `{}`", fields[1]),
                ));
            }
            shells.push((energy, g));
        }
        if shells.is_empty() {
            return Err(Error::EmptyInput(origin.to_path_buf()));
        }
        Self::from_shells(&shells)
    }

    pub fn num_shells(&self) -> usize {
        self.inner.energies.len()
    }

    pub fn count_model(&self) -> CountModel {
        self.inner.model
    }

    pub fn shell_energy(&self, j: usize) -> f64 {
        self.inner.energies[j]
    }

    pub fn shell_energies(&self) -> &[f64] {
        &self.inner.energies
    }

    /// Shell energy relative to the ground shell.
    pub fn excitation(&self, j: usize) -> f64 {
        self.inner.excitations[j]
    }

    pub fn ln_degeneracy(&self, j: usize) -> f64 {
        self.inner.ln_degeneracy[j]
    }

    pub fn degeneracy(&self, j: usize) -> f64 {
        match self.exact_degeneracy(j) {
            Some(g) => g as f64,
            None => self.inner.ln_degeneracy[j].exp(),
        }
    }

    /// The degeneracy as an integer, when the count model is discrete and the
    /// value is exactly representable.
    pub fn exact_degeneracy(&self, j: usize) -> Option<u64> {
        match self.inner.model {
            CountModel::Discrete => self.inner.exact_degeneracy[j],
            CountModel::Continuum => None,
        }
    }

    /// `ln N_j`, the log of the number of levels in shells `0..=j`.
    pub fn ln_cum_count(&self, j: usize) -> f64 {
        self.inner.ln_cum_count[j]
    }

    pub fn ground_energy(&self) -> f64 {
        self.inner.energies[0]
    }

    pub fn ln_dimension(&self) -> f64 {
        *self.inner.ln_cum_count.last().unwrap()
    }

    pub fn dimension(&self) -> f64 {
        self.ln_dimension().exp()
    }

    /// Energy of the maximally mixed state.
    pub fn mean_energy(&self) -> f64 {
        self.ground_energy() + self.mean_excitation_at(self.num_shells() - 1, 1.0)
    }

    /// True when every shell is a single level.
    pub fn is_nondegenerate(&self) -> bool {
        self.inner.exact_degeneracy.iter().all(|g| *g == Some(1))
            && self.inner.model == CountModel::Discrete
    }

    /// Every level energy in ascending order, expanding degenerate shells.
    pub fn levels(&self) -> Result<Vec<f64>> {
        let mut total = 0usize;
        let mut out = Vec::new();
        for j in 0..self.num_shells() {
            let g = self
                .exact_degeneracy(j)
                .ok_or_else(|| Error::NotDense(format!("shell {j} has a non-integer degeneracy")))?
                as usize;
            total = total.saturating_add(g);
            if total > MAX_DENSE_DIMENSION {
                return Err(Error::NotDense(format!(
                    "dimension exceeds {MAX_DENSE_DIMENSION}"
                )));
            }
            out.extend(std::iter::repeat_n(self.shell_energy(j), g));
        }
        Ok(out)
    }

    // Cut-point arithmetic. `frac` ranges over [0, 1]; 0 is the previous boundary.

    pub(crate) fn ln_count_at(&self, shell: usize, frac: f64) -> f64 {
        let t = &self.inner;
        if frac >= 1.0 {
            return t.ln_cum_count[shell];
        }
        let inner = frac.ln() + t.ln_degeneracy[shell];
        if shell == 0 {
            inner
        } else {
            log_add_exp(t.ln_cum_count[shell - 1], inner)
        }
    }

    /// Log of the summed excitation energy of the levels below the cut.
    pub(crate) fn ln_weight_at(&self, shell: usize, frac: f64) -> f64 {
        let t = &self.inner;
        if frac >= 1.0 {
            return t.ln_cum_weight[shell];
        }
        if shell == 0 {
            return f64::NEG_INFINITY;
        }
        let inner = frac.ln() + t.ln_degeneracy[shell] + t.excitations[shell].ln();
        log_add_exp(t.ln_cum_weight[shell - 1], inner)
    }

    /// Mean excitation energy of the flat state at the cut.
    pub(crate) fn mean_excitation_at(&self, shell: usize, frac: f64) -> f64 {
        let w = self.ln_weight_at(shell, frac);
        if w == f64::NEG_INFINITY {
            0.0
        } else {
            (w - self.ln_count_at(shell, frac)).exp()
        }
    }

    /// `ln(count(hi) - count(lo))` for two cuts with `lo <= hi`.
    pub(crate) fn ln_count_between(&self, lo: CutPoint, hi: CutPoint) -> f64 {
        let t = &self.inner;
        if lo.shell == hi.shell {
            let df = hi.frac - lo.frac;
            return if df > 0.0 {
                df.ln() + t.ln_degeneracy[lo.shell]
            } else {
                f64::NEG_INFINITY
            };
        }
        let mut terms = [f64::NEG_INFINITY; 3];
        if lo.frac < 1.0 {
            terms[0] = (1.0 - lo.frac).ln() + t.ln_degeneracy[lo.shell];
        }
        if hi.shell > lo.shell + 1 {
            terms[1] = log_sub_exp(t.ln_cum_count[hi.shell - 1], t.ln_cum_count[lo.shell]);
        }
        if hi.frac > 0.0 {
            terms[2] = hi.frac.ln() + t.ln_degeneracy[hi.shell];
        }
        log_sum_exp(&terms)
    }

    /// Checks that a cut lies in the spectrum and covers at least one level.
    pub fn validate_cut(&self, cut: CutPoint) -> Result<()> {
        if cut.shell >= self.num_shells() {
            return Err(Error::InvalidCut(format!(
                "shell {} out of range (spectrum has {})",
                cut.shell,
                self.num_shells()
            )));
        }
        if !(cut.frac > 0.0 && cut.frac <= 1.0) {
            return Err(Error::InvalidCut(format!(
                "fraction {} outside (0, 1]",
                cut.frac
            )));
        }
        if self.ln_count_at(cut.shell, cut.frac) < -1e-12 {
            return Err(Error::InvalidCut("cut covers less than one level".into()));
        }
        Ok(())
    }

    /// Mean energy of the flat state over the levels below `cut`.
    pub fn flat_energy(&self, cut: CutPoint) -> Result<f64> {
        self.validate_cut(cut)?;
        Ok(self.ground_energy() + self.mean_excitation_at(cut.shell, cut.frac))
    }

    /// `ln` of the number of levels below `cut` (the flat state's entropy).
    pub fn flat_log_count(&self, cut: CutPoint) -> Result<f64> {
        self.validate_cut(cut)?;
        Ok(self.ln_count_at(cut.shell, cut.frac).max(0.0))
    }

    /// Number of levels below `cut`. Exact for discrete spectra whose counts
    /// fit in 53 bits and cuts at whole levels.
    pub fn cut_count(&self, cut: CutPoint) -> f64 {
        let exact = (0..=cut.shell)
            .map(|j| self.exact_degeneracy(j))
            .try_fold(0u64, |acc, g| acc.checked_add(g?));
        if let Some(total) = exact.filter(|t| *t < (1u64 << 53)) {
            let g = self.exact_degeneracy(cut.shell).unwrap_or(0) as f64;
            let partial = cut.frac * g;
            let whole = partial.round();
            if (partial - whole).abs() <= 1e-9 * g.max(1.0) {
                return (total as f64 - g) + whole;
            }
        }
        self.ln_count_at(cut.shell, cut.frac).exp()
    }

    pub fn ground_cut(&self) -> CutPoint {
        CutPoint::new(0, (-self.ln_degeneracy(0)).exp().min(1.0))
    }

    pub fn full_cut(&self) -> CutPoint {
        CutPoint::shell_end(self.num_shells() - 1)
    }

    /// The cut covering exactly `count` levels.
    pub fn cut_at_count(&self, count: f64) -> Result<CutPoint> {
        if !(count >= 1.0) {
            return Err(Error::InvalidCut(format!("count {count} below one")));
        }
        let ln_c = count.ln();
        let t = &self.inner;
        let tol = 1e-12;
        if ln_c > self.ln_dimension() + tol {
            return Err(Error::InvalidCut(format!(
                "count {count} exceeds the dimension {}",
                self.dimension()
            )));
        }
        let shell = t
            .ln_cum_count
            .iter()
            .position(|&n| n >= ln_c - tol)
            .unwrap_or(self.num_shells() - 1);
        let below = if shell == 0 {
            f64::NEG_INFINITY
        } else {
            t.ln_cum_count[shell - 1]
        };
        let frac = if (t.ln_cum_count[shell] - ln_c).abs() <= tol {
            1.0
        } else {
            (log_sub_exp(ln_c, below) - t.ln_degeneracy[shell])
                .exp()
                .clamp(0.0, 1.0)
        };
        Ok(CutPoint::new(shell, frac))
    }
}

fn check_dos_grid(e_max: f64, levels: usize) -> Result<()> {
    if !(e_max.is_finite() && e_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need E_m > 0, got {e_max}"
        )));
    }
    if levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "need levels >= 2, got {levels}"
        )));
    }
    Ok(())
}

fn exact_integer(g: f64) -> Option<u64> {
    (g.fract() == 0.0 && (1.0..=MAX_EXACT).contains(&g)).then_some(g as u64)
}

fn exact_binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
        if acc > MAX_EXACT as u128 {
            return None;
        }
    }
    Some(acc as u64)
}
