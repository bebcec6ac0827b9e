//! Minimum entropy over two-block states on one energy slice.
//!
//! Cuts below the slice ("low") and above it ("high") are grouped into spans,
//! one per shell. A pair of spans is a cell. Span endpoints are evaluated
//! first to obtain an incumbent. Cells are then processed best-first by a
//! cheap lower bound: a cell whose bound cannot beat the incumbent is dropped,
//! a large one is split in two, and a small one is searched directly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::numeric::{neg_x_ln_x, scan_golden_min};
use crate::spectrum::{CountModel, CutPoint, Spectrum};
use crate::states::two_block_entropy_ln;

/// Integer spans up to this many points are enumerated in the inner search.
const INNER_ENUMERATE: u64 = 32;
/// Integer spans up to this many points are enumerated in the outer search.
const OUTER_ENUMERATE: u64 = 4096;
const SCAN_POINTS: usize = 9;
const GOLDEN_REL_TOL: f64 = 1e-10;
/// Boxes narrower than this fraction of their cell are searched directly.
const ATOMIC_FRACTION: f64 = 1.0 / 8.0;

fn prune_slack(incumbent: f64) -> f64 {
    1e-13 * incumbent.abs().max(1.0)
}

/// A range of cuts inside one shell, parameterized by `t`.
///
/// Continuous spans use `t = frac`. Integer spans use `t` = number of levels
/// taken from the shell, so `frac = t / scale` with `scale = g`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Span {
    pub shell: usize,
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
    pub integer: bool,
}

impl Span {
    fn cut(&self, t: f64) -> CutPoint {
        CutPoint::new(self.shell, (t / self.scale).min(1.0))
    }

    fn points(&self) -> Option<u64> {
        self.integer.then(|| (self.hi - self.lo) as u64 + 1)
    }

    fn is_point(&self) -> bool {
        self.hi <= self.lo
    }

    fn width(&self) -> f64 {
        (self.hi - self.lo).max(f64::MIN_POSITIVE)
    }

    fn mid(&self) -> f64 {
        let m = 0.5 * (self.lo + self.hi);
        if self.integer {
            m.floor()
        } else {
            m
        }
    }

    fn split(&self) -> (Span, Span) {
        let m = self.mid();
        let upper = if self.integer { m + 1.0 } else { m };
        (Span { hi: m, ..*self }, Span { lo: upper, ..*self })
    }
}

/// A box of a cell awaiting search, ordered so the heap pops the lowest bound.
struct Cell {
    lb: f64,
    seq: usize,
    low: Span,
    high: Span,
    low_root: f64,
    high_root: f64,
}

impl Cell {
    fn atomic(span: &Span, root: f64) -> bool {
        span.is_point() || (!span.integer && span.width() <= root * ATOMIC_FRACTION)
    }

    fn low_atomic(&self) -> bool {
        Self::atomic(&self.low, self.low_root)
    }

    fn high_atomic(&self) -> bool {
        Self::atomic(&self.high, self.high_root)
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Clone, Copy, Debug)]
struct CutInfo {
    cut: CutPoint,
    ln_count: f64,
    excitation: f64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Candidate {
    pub entropy: f64,
    pub low: CutPoint,
    pub high: CutPoint,
    pub lambda: f64,
}

impl Candidate {
    /// Strict preference: lower entropy, then lexicographically smaller cuts.
    fn better_than(&self, other: &Candidate) -> bool {
        let tol = 1e-15 * self.entropy.abs().max(1.0);
        if self.entropy < other.entropy - tol {
            return true;
        }
        if self.entropy > other.entropy + tol {
            return false;
        }
        let a = (self.low.order_key(), self.high.order_key());
        let b = (other.low.order_key(), other.high.order_key());
        cmp_keys(a, b) == Ordering::Less
    }
}

fn cmp_keys(a: ((usize, f64), (usize, f64)), b: ((usize, f64), (usize, f64))) -> Ordering {
    a.0 .0
        .cmp(&b.0 .0)
        .then(a.0 .1.total_cmp(&b.0 .1))
        .then(a.1 .0.cmp(&b.1 .0))
        .then(a.1 .1.total_cmp(&b.1 .1))
}

fn keep_best(best: &mut Option<Candidate>, c: Candidate) {
    match best {
        Some(b) if !c.better_than(b) => {}
        _ => *best = Some(c),
    }
}

/// One fixed-energy problem with `0 < eps < mean excitation`.
pub(crate) struct Slice<'a> {
    spec: &'a Spectrum,
    eps: f64,
    pub low_spans: Vec<Span>,
    pub high_spans: Vec<Span>,
    /// The cut whose flat energy equals the target, when it is a valid cut.
    pub on_plane: Option<CutPoint>,
}

impl<'a> Slice<'a> {
    pub fn new(spec: &'a Spectrum, eps: f64) -> Self {
        let m = spec.num_shells();
        let boundary = |j: usize| spec.mean_excitation_at(j, 1.0);
        // First shell whose boundary flat state reaches the target.
        let mut lo = 1;
        let mut hi = m - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if boundary(mid) >= eps {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let j_e = lo;
        let f_e = if boundary(j_e) <= eps {
            1.0
        } else {
            let below = boundary(j_e - 1);
            (spec.ln_cum_count(j_e - 1) - spec.ln_degeneracy(j_e) + (eps - below).ln()
                - (spec.excitation(j_e) - eps).ln())
            .exp()
            .clamp(0.0, 1.0)
        };

        let integer_g = |j: usize| match spec.count_model() {
            CountModel::Discrete => spec.exact_degeneracy(j),
            CountModel::Continuum => None,
        };
        let span = |shell: usize, lo: f64, hi: f64, g: Option<u64>| Span {
            shell,
            lo,
            hi,
            scale: g.map_or(1.0, |g| g as f64),
            integer: g.is_some(),
        };

        let mut low_spans = Vec::with_capacity(j_e + 1);
        let mut high_spans = Vec::with_capacity(m - j_e);
        let mut on_plane = None;

        for j in 0..j_e {
            let g = integer_g(j);
            let lo = match (j, g) {
                (0, Some(_)) => 1.0,
                (0, None) => spec.ground_cut().frac,
                (_, Some(_)) => 1.0,
                (_, None) => 0.0,
            };
            let hi = g.map_or(1.0, |g| g as f64);
            low_spans.push(span(j, lo, hi, g));
        }

        match integer_g(j_e) {
            Some(g) => {
                let x = f_e * g as f64;
                let near = x.round();
                let snap_tol = 1e-9f64.max(x * 1e-14);
                let (t_low, t_high) = if (x - near).abs() <= snap_tol {
                    on_plane = Some(if near >= 1.0 {
                        CutPoint::new(j_e, near / g as f64)
                    } else {
                        CutPoint::shell_end(j_e - 1)
                    });
                    (near - 1.0, near + 1.0)
                } else {
                    (x.floor(), x.ceil())
                };
                if t_low >= 1.0 {
                    low_spans.push(span(j_e, 1.0, t_low, Some(g)));
                }
                if t_high <= g as f64 {
                    high_spans.push(span(j_e, t_high.max(1.0), g as f64, Some(g)));
                }
            }
            None => {
                on_plane = Some(CutPoint::new(j_e, f_e));
                low_spans.push(span(j_e, 0.0, f_e, None));
                high_spans.push(span(j_e, f_e, 1.0, None));
            }
        }

        for j in j_e + 1..m {
            let g = integer_g(j);
            let lo = if g.is_some() { 1.0 } else { 0.0 };
            let hi = g.map_or(1.0, |g| g as f64);
            high_spans.push(span(j, lo, hi, g));
        }

        Self {
            spec,
            eps,
            low_spans,
            high_spans,
            on_plane,
        }
    }

    fn info(&self, cut: CutPoint) -> CutInfo {
        CutInfo {
            cut,
            ln_count: self.spec.ln_count_at(cut.shell, cut.frac).max(0.0),
            excitation: self.spec.mean_excitation_at(cut.shell, cut.frac),
        }
    }

    fn weights(&self, x: &CutInfo, y: &CutInfo) -> (f64, f64) {
        let a = (self.eps - x.excitation).max(0.0);
        let b = (y.excitation - self.eps).max(0.0);
        (a, b)
    }

    /// Entropy of the pair mixed onto the slice.
    fn evaluate(&self, x: &CutInfo, y: &CutInfo) -> Candidate {
        let (a, b) = self.weights(x, y);
        if a == 0.0 {
            return Candidate {
                entropy: x.ln_count,
                low: x.cut,
                high: x.cut,
                lambda: 1.0,
            };
        }
        if b == 0.0 {
            return Candidate {
                entropy: y.ln_count,
                low: y.cut,
                high: y.cut,
                lambda: 0.0,
            };
        }
        let mu = a / (a + b);
        let ln_gap = self.spec.ln_count_between(x.cut, y.cut);
        Candidate {
            entropy: two_block_entropy_ln(x.ln_count, y.ln_count, ln_gap, mu),
            low: x.cut,
            high: y.cut,
            lambda: b / (a + b),
        }
    }

    /// Lower bound on the entropy of any pair in the cell.
    fn lower_bound(&self, xs: (&CutInfo, &CutInfo), ys: (&CutInfo, &CutInfo)) -> f64 {
        let (x_lo, x_hi) = xs;
        let (y_lo, y_hi) = ys;
        let mu = |x: &CutInfo, y: &CutInfo| {
            let (a, b) = self.weights(x, y);
            if a + b == 0.0 {
                0.0
            } else {
                a / (a + b)
            }
        };
        // The high-block mass m2 = mu (1 - x/y); mu falls as either cut rises.
        let r_min = (-(x_hi.ln_count - y_lo.ln_count).exp_m1()).clamp(0.0, 1.0);
        let r_max = (-(x_lo.ln_count - y_hi.ln_count).exp_m1()).clamp(0.0, 1.0);
        let m2_range = [mu(x_hi, y_hi) * r_min, mu(x_lo, y_lo) * r_max];

        // S = H(m1, m2) + m1 ln x + m2 ln(y - x), concave in m2 for a fixed
        // last coefficient, so each bound is attained at an endpoint.
        let concave_min = |c: f64, extra: f64| {
            m2_range
                .iter()
                .map(|&m2| {
                    neg_x_ln_x(m2)
                        + neg_x_ln_x(1.0 - m2)
                        + (1.0 - m2) * x_lo.ln_count
                        + m2 * c
                        + extra
                })
                .fold(f64::INFINITY, f64::min)
        };
        // m2 ln(y - x) >= -1 / (e y) whenever y - x < 1.
        let generic = concave_min(0.0, -(-1.0 - y_lo.ln_count).exp());
        if x_hi.cut.order_key() <= y_lo.cut.order_key() {
            let ln_gap = self.spec.ln_count_between(x_hi.cut, y_lo.cut);
            if ln_gap.is_finite() {
                return generic.max(concave_min(ln_gap, 0.0));
            }
        }
        generic
    }

    /// Exact search over one cell.
    fn search_cell(&self, low: &Span, high: &Span) -> Candidate {
        let outer_is_low = match (low.points(), high.points()) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => true,
        };
        let (outer, inner) = if outer_is_low {
            (low, high)
        } else {
            (high, low)
        };
        let pair = |o: &CutInfo, i: &CutInfo| {
            if outer_is_low {
                self.evaluate(o, i)
            } else {
                self.evaluate(i, o)
            }
        };

        let inner_best = |o: &CutInfo| -> Candidate {
            let at = |t: f64| pair(o, &self.info(inner.cut(t)));
            minimize_span(inner, INNER_ENUMERATE, at)
        };
        let at_outer = |t: f64| inner_best(&self.info(outer.cut(t)));
        minimize_span(outer, OUTER_ENUMERATE, at_outer)
    }

    /// The minimum-entropy pair on the slice.
    pub fn solve(&self) -> Candidate {
        let low_ends: Vec<[CutInfo; 2]> = self
            .low_spans
            .iter()
            .map(|s| [self.info(s.cut(s.lo)), self.info(s.cut(s.hi))])
            .collect();
        let high_ends: Vec<[CutInfo; 2]> = self
            .high_spans
            .iter()
            .map(|s| [self.info(s.cut(s.lo)), self.info(s.cut(s.hi))])
            .collect();

        let mut best: Option<Candidate> = None;
        if let Some(cut) = self.on_plane {
            let x = self.info(cut);
            keep_best(&mut best, self.evaluate(&x, &x));
        }
        for (ls, le) in self.low_spans.iter().zip(&low_ends) {
            for (hs, he) in self.high_spans.iter().zip(&high_ends) {
                let lows: &[CutInfo] = if ls.is_point() { &le[1..] } else { le };
                let highs: &[CutInfo] = if hs.is_point() { &he[1..] } else { he };
                for x in lows {
                    for y in highs {
                        keep_best(&mut best, self.evaluate(x, y));
                    }
                }
            }
        }
        let mut best = best.expect("slice has at least one feasible pair");

        let mut queue = BinaryHeap::new();
        let mut seq = 0usize;
        for (ls, le) in self.low_spans.iter().zip(&low_ends) {
            for (hs, he) in self.high_spans.iter().zip(&high_ends) {
                if ls.is_point() && hs.is_point() {
                    continue;
                }
                let lb = self.lower_bound((&le[0], &le[1]), (&he[0], &he[1]));
                if lb < best.entropy - prune_slack(best.entropy) {
                    queue.push(Cell {
                        lb,
                        seq,
                        low: *ls,
                        high: *hs,
                        low_root: ls.width(),
                        high_root: hs.width(),
                    });
                    seq += 1;
                }
            }
        }

        while let Some(cell) = queue.pop() {
            if cell.lb >= best.entropy - prune_slack(best.entropy) {
                break;
            }
            let (low_atomic, high_atomic) = (cell.low_atomic(), cell.high_atomic());
            if low_atomic && high_atomic {
                let c = self.search_cell(&cell.low, &cell.high);
                if c.better_than(&best) {
                    best = c;
                }
                continue;
            }
            let mid_low = self.info(cell.low.cut(cell.low.mid()));
            let mid_high = self.info(cell.high.cut(cell.high.mid()));
            let c = self.evaluate(&mid_low, &mid_high);
            if c.better_than(&best) {
                best = c;
            }
            let split_low = !low_atomic
                && (high_atomic
                    || cell.low.width() / cell.low_root >= cell.high.width() / cell.high_root);
            let children = if split_low {
                let (a, b) = cell.low.split();
                [(a, cell.high), (b, cell.high)]
            } else {
                let (a, b) = cell.high.split();
                [(cell.low, a), (cell.low, b)]
            };
            for (low, high) in children {
                let xs = (self.info(low.cut(low.lo)), self.info(low.cut(low.hi)));
                let ys = (self.info(high.cut(high.lo)), self.info(high.cut(high.hi)));
                let lb = self.lower_bound((&xs.0, &xs.1), (&ys.0, &ys.1));
                if lb < best.entropy - prune_slack(best.entropy) {
                    queue.push(Cell {
                        lb,
                        seq,
                        low,
                        high,
                        ..cell
                    });
                    seq += 1;
                }
            }
        }
        best
    }
}

/// Minimizes `f` over a span: enumeration for small integer spans, otherwise
/// scan plus golden-section, with integer spans rounded to the neighbouring
/// integers of the continuous argmin.
fn minimize_span<F>(span: &Span, enumerate_up_to: u64, f: F) -> Candidate
where
    F: Fn(f64) -> Candidate,
{
    let mut best: Option<Candidate> = None;
    match span.points() {
        Some(n) if n <= enumerate_up_to => {
            for i in 0..n {
                keep_best(&mut best, f(span.lo + i as f64));
            }
        }
        _ => {
            if span.is_point() {
                return f(span.lo);
            }
            let tol = GOLDEN_REL_TOL * (span.hi - span.lo);
            let (t, _) = scan_golden_min(|t| f(t).entropy, span.lo, span.hi, SCAN_POINTS, tol);
            if span.integer {
                keep_best(&mut best, f(t.floor().clamp(span.lo, span.hi)));
                keep_best(&mut best, f(t.ceil().clamp(span.lo, span.hi)));
                keep_best(&mut best, f(span.lo));
                keep_best(&mut best, f(span.hi));
            } else {
                keep_best(&mut best, f(t));
            }
        }
    }
    best.expect("span is not empty")
}
