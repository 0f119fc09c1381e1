use super::product;
use crate::dsp::{bin_of, cis, forward_plan, signed_index, C64};
use crate::error::{Error, Result};
use crate::waveform::{BasebandSignal, PreambleRecord};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseRule {
    /// Peak of `|Y|^2` only.
    YOnly,
    /// Larger of the `|Y|^2` and `|Z|^2` peaks.
    YZCombined,
}

/// `Z(n,k) = (Y(n,k) - Y(n,k+1) exp(-jπ/N)) / sqrt(2)`
#[inline]
pub fn z_value(y_k: C64, y_k1: C64, n_fft: usize) -> C64 {
    (y_k - y_k1 * cis(-PI / n_fft as f64)) * FRAC_1_SQRT_2
}

/// Integer offsets searched for a given CFO bound: `[-K, K]` with
/// `K = ceil(nu_max)`, or every offset when the bound does not restrict the
/// search.
fn search_bound(n_fft: usize, nu_max: Option<f64>) -> Option<i64> {
    let k = nu_max.map(|v| v.abs().ceil() as i64)?;
    if 2 * (k + 1) + 1 >= n_fft as i64 {
        None
    } else {
        Some(k)
    }
}

/// Search order for tie-breaking: ascending `|k|`, then `k`.
fn ordered(ks: impl Iterator<Item = i64>) -> Vec<i64> {
    let mut v: Vec<i64> = ks.collect();
    v.sort_by_key(|&k| (k.abs(), k));
    v
}

/// `Y(n,k)` and `Z(n,k)` over a block of window starts.
///
/// With a CFO bound `K`, `Y` is kept for `k` in `[-K-1, K+1]` (one margin bin
/// each side for interpolation) and `Z` for `k` in `[-K, K-1]`. Without a
/// bound every offset is kept and `k+1` wraps cyclically.
#[derive(Debug, Clone)]
pub struct SyncGrid {
    pub n_fft: usize,
    pub n_lo: i64,
    bound: Option<i64>,
    width: usize,
    values: Vec<C64>,
    z_values: Vec<C64>,
}

impl SyncGrid {
    pub fn compute(
        r: &BasebandSignal,
        rp: &PreambleRecord,
        n_range: Range<i64>,
        nu_max: Option<f64>,
    ) -> Result<Self> {
        let n_fft = rp.n_fft();
        if n_range.is_empty() {
            return Err(Error::InvalidArgument("empty time range".into()));
        }
        let bound = search_bound(n_fft, nu_max);
        let width = match bound {
            Some(k) => (2 * k + 3) as usize,
            None => n_fft,
        };
        let rows = (n_range.end - n_range.start) as usize;
        let mut grid = Self {
            n_fft,
            n_lo: n_range.start,
            bound,
            width,
            values: Vec::with_capacity(rows * width),
            z_values: Vec::with_capacity(rows * width),
        };
        let plan = forward_plan(n_fft);
        let mut buf = vec![C64::new(0.0, 0.0); n_fft];
        let zero = C64::new(0.0, 0.0);
        for n in n_range {
            product(r.window(n, n_fft)?, rp, &mut buf);
            plan.process(&mut buf);
            let base = grid.values.len();
            grid.values.resize(base + width, zero);
            grid.z_values.resize(base + width, zero);
            for k in grid.stored_ks() {
                let col = base + grid.column(k);
                grid.values[col] = buf[bin_of(k, n_fft)];
                if bound.is_none_or(|kb| (-kb..kb).contains(&k)) {
                    grid.z_values[col] =
                        z_value(buf[bin_of(k, n_fft)], buf[bin_of(k + 1, n_fft)], n_fft);
                }
            }
        }
        Ok(grid)
    }

    fn stored_ks(&self) -> Range<i64> {
        match self.bound {
            Some(k) => -k - 1..k + 2,
            None => {
                let h = (self.n_fft / 2) as i64;
                -h..self.n_fft as i64 - h
            }
        }
    }

    pub fn n_range(&self) -> Range<i64> {
        self.n_lo..self.n_lo + (self.values.len() / self.width) as i64
    }

    /// Searched integer offsets for `Y`.
    pub fn y_ks(&self) -> Vec<i64> {
        match self.bound {
            Some(k) => (-k..=k).collect(),
            None => self.stored_ks().collect(),
        }
    }

    /// Searched integer offsets for `Z`.
    pub fn z_ks(&self) -> Vec<i64> {
        match self.bound {
            Some(k) => (-k..k).collect(),
            None => self.stored_ks().collect(),
        }
    }

    fn index(&self, n: i64, k: i64) -> Option<usize> {
        if !self.n_range().contains(&n) {
            return None;
        }
        if let Some(kb) = self.bound {
            if k < -kb - 1 || k > kb + 1 {
                return None;
            }
        }
        Some((n - self.n_lo) as usize * self.width + self.column(k))
    }

    fn column(&self, k: i64) -> usize {
        match self.bound {
            Some(kb) => (k + kb + 1) as usize,
            None => bin_of(k, self.n_fft),
        }
    }

    pub fn y(&self, n: i64, k: i64) -> Option<C64> {
        self.index(n, k).map(|i| self.values[i])
    }

    pub fn z(&self, n: i64, k: i64) -> Option<C64> {
        let inside = match self.bound {
            Some(kb) => (-kb..kb).contains(&k),
            None => true,
        };
        if !inside {
            return None;
        }
        self.index(n, k).map(|i| self.z_values[i])
    }
}

/// Outcome of the coarse search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseDecision {
    pub n_m: i64,
    pub k_m: i64,
    pub used_z_metric: bool,
    /// Winning `|Y|^2` or `|Z|^2`.
    pub metric: f64,
    /// `Y(n_M, k_M - 1)`, `Y(n_M, k_M)`, `Y(n_M, k_M + 1)`.
    pub y_neighbors: [C64; 3],
}

#[derive(Debug, Clone, Copy)]
struct Best<const W: usize> {
    metric: f64,
    n: i64,
    k: i64,
    /// `Y` from `k - 1` upwards.
    ys: [C64; W],
}

/// Running arg-max of `|Y|^2` and `|Z|^2` over window starts fed in
/// ascending order.
pub(crate) struct CoarseTracker {
    n_fft: usize,
    y_ks: Vec<i64>,
    z_ks: Vec<i64>,
    rot: C64,
    best_y: Option<Best<3>>,
    best_z: Option<Best<4>>,
}

impl CoarseTracker {
    pub(crate) fn new(n_fft: usize, nu_max: Option<f64>) -> Self {
        let h = (n_fft / 2) as i64;
        let (y_ks, z_ks) = match search_bound(n_fft, nu_max) {
            Some(k) => (ordered(-k..=k), ordered(-k..k)),
            None => (ordered(-h..n_fft as i64 - h), ordered(-h..n_fft as i64 - h)),
        };
        Self {
            n_fft,
            y_ks,
            z_ks,
            rot: cis(-PI / n_fft as f64),
            best_y: None,
            best_z: None,
        }
    }

    pub(crate) fn search_len(&self) -> usize {
        self.y_ks.len()
    }

    /// Feeds the row `Y(n,.)`; returns the largest `|Y|^2` or `|Z|^2` in it.
    pub(crate) fn update(&mut self, n: i64, y: impl Fn(i64) -> C64) -> f64 {
        let mut row_max = 0.0f64;
        for &k in &self.y_ks {
            let m = y(k).norm_sqr();
            row_max = row_max.max(m);
            if self.best_y.is_none_or(|b| m > b.metric) {
                self.best_y = Some(Best {
                    metric: m,
                    n,
                    k,
                    ys: [y(k - 1), y(k), y(k + 1)],
                });
            }
        }
        for &k in &self.z_ks {
            let m = ((y(k) - y(k + 1) * self.rot) * FRAC_1_SQRT_2).norm_sqr();
            row_max = row_max.max(m);
            if self.best_z.is_none_or(|b| m > b.metric) {
                self.best_z = Some(Best {
                    metric: m,
                    n,
                    k,
                    ys: [y(k - 1), y(k), y(k + 1), y(k + 2)],
                });
            }
        }
        row_max
    }

    pub(crate) fn finish(&self, rule: CoarseRule) -> Option<CoarseDecision> {
        let by = self.best_y?;
        let from_y = CoarseDecision {
            n_m: by.n,
            k_m: by.k,
            used_z_metric: false,
            metric: by.metric,
            y_neighbors: by.ys,
        };
        if rule == CoarseRule::YOnly {
            return Some(from_y);
        }
        let bz = match self.best_z {
            Some(b) if b.metric > by.metric => b,
            _ => return Some(from_y),
        };
        let [ym1, y0, y1, y2] = bz.ys;
        let (k, ys) = if y1.norm_sqr() > y0.norm_sqr() {
            (bz.k + 1, [y0, y1, y2])
        } else {
            (bz.k, [ym1, y0, y1])
        };
        Some(CoarseDecision {
            n_m: bz.n,
            k_m: signed_index(bin_of(k, self.n_fft), self.n_fft),
            used_z_metric: true,
            metric: bz.metric,
            y_neighbors: ys,
        })
    }
}

/// Coarse time and integer CFO decision over a precomputed grid.
pub fn coarse_detect(grid: &SyncGrid, rule: CoarseRule) -> Result<CoarseDecision> {
    let mut t = CoarseTracker {
        n_fft: grid.n_fft,
        y_ks: ordered(grid.y_ks().into_iter()),
        z_ks: ordered(grid.z_ks().into_iter()),
        rot: cis(-PI / grid.n_fft as f64),
        best_y: None,
        best_z: None,
    };
    for n in grid.n_range() {
        t.update(n, |k| grid.y(n, k).unwrap_or_default());
    }
    t.finish(rule)
        .ok_or_else(|| Error::InvalidArgument("empty synchronization grid".into()))
}
