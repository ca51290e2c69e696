//! Zeros of k ↦ det_q(I + T_V(z(k))) by adaptive rectangle subdivision.

use std::collections::HashMap;
use std::sync::Mutex;

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birman_schwinger::{Backend, BirmanSchwinger, EvalPoint};
use crate::det_index::{self, Contour, IndexOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::localization::{KPoint, Region};
use crate::model::Threshold;

/// A log-branch of the function whose zeros are sought.
pub type LogFn<'a> = dyn Fn(c64) -> Result<c64> + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroSearch {
    /// Regularization order of the determinant.
    pub q: u32,
    /// Boxes are not split below this size.
    pub min_box: f64,
    pub newton_tol: f64,
    pub max_retries: usize,
    pub index: IndexOptions,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        Self {
            q: 1,
            min_box: 1e-9,
            newton_tol: 1e-13,
            max_retries: 3,
            index: IndexOptions {
                initial: 8,
                ..IndexOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroRecord {
    pub point: KPoint,
    pub multiplicity: i64,
    /// |F| at the refined point.
    pub residual: f64,
    /// Box whose winding gave the multiplicity.
    pub contour: Contour,
    pub channel: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub zeros: Vec<ZeroRecord>,
    /// Boxes whose winding could not be resolved, with their winding.
    pub unresolved: Vec<(Contour, i64)>,
    pub total_winding: i64,
}

impl SearchOutcome {
    pub fn is_resolved(&self) -> bool {
        self.unresolved.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    lo: c64,
    hi: c64,
}

impl Rect {
    fn size(&self) -> f64 {
        (self.hi.re - self.lo.re).max(self.hi.im - self.lo.im)
    }

    fn contour(&self) -> Contour {
        Contour::rectangle(self.lo, self.hi)
    }

    fn centre(&self) -> c64 {
        (self.lo + self.hi) * 0.5
    }

    fn contains(&self, k: c64, margin: f64) -> bool {
        k.re >= self.lo.re - margin
            && k.re <= self.hi.re + margin
            && k.im >= self.lo.im - margin
            && k.im <= self.hi.im + margin
    }

    /// Four children split at the (shifted) centre.
    fn split(&self, shift: f64) -> [Rect; 4] {
        let w = self.hi - self.lo;
        let m = self.lo + c64::new(w.re * (0.5 + shift), w.im * (0.5 - 0.7 * shift));
        [
            Rect { lo: self.lo, hi: m },
            Rect {
                lo: c64::new(m.re, self.lo.im),
                hi: c64::new(self.hi.re, m.im),
            },
            Rect {
                lo: c64::new(self.lo.re, m.im),
                hi: c64::new(m.re, self.hi.im),
            },
            Rect { lo: m, hi: self.hi },
        ]
    }
}

struct Searcher<'a, 'f> {
    f: &'a LogFn<'f>,
    opts: ZeroSearch,
    mass: f64,
    threshold: Threshold,
    zeros: Vec<ZeroRecord>,
    unresolved: Vec<(Contour, i64)>,
}

impl Searcher<'_, '_> {
    fn winding(&self, r: &Rect) -> Result<i64> {
        Ok(det_index::scalar_index_log(self.f, &r.contour(), self.opts.index)?.index)
    }

    fn log_derivative(&self, k: c64, h: f64) -> Result<c64> {
        let a = (self.f)(k + h)?;
        let b = (self.f)(k - h)?;
        let d = c64::new(a.re - b.re, linalg::wrap_angle(a.im - b.im));
        Ok(d / (2.0 * h))
    }

    /// Newton on ln F with multiplicity w; None if it leaves the box.
    fn newton(&self, r: &Rect, w: i64) -> Result<Option<c64>> {
        let mut k = r.centre();
        let scale = r.size();
        // (ln F)' ~ w/(k − k0): the difference step must stay well below the
        // distance to the zero, which the previous step estimates.
        let mut h = 1e-7 * scale;
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let d = self.log_derivative(k, h)?;
            if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                // At the noise floor the difference quotient degenerates.
                return Ok((last < 1e-8 * scale).then_some(k));
            }
            let step = -(w as f64) / d;
            k += step;
            last = step.norm();
            h = (1e-4 * step.norm())
                .min(1e-7 * scale)
                .max(1e-14 * k.norm().max(scale));
            if !r.contains(k, 0.25 * scale) {
                return Ok(None);
            }
            if step.norm() <= self.opts.newton_tol.max(1e-15 * k.norm()) {
                break;
            }
        }
        Ok(Some(k))
    }

    fn record(&mut self, r: &Rect, w: i64, k: c64) -> Result<()> {
        let residual = (self.f)(k).map(|l| l.re.exp()).unwrap_or(0.0);
        self.zeros.push(ZeroRecord {
            point: KPoint::new(k, self.mass, self.threshold),
            multiplicity: w,
            residual,
            contour: r.contour(),
            channel: None,
        });
        Ok(())
    }

    fn process(&mut self, r: Rect, w: i64) -> Result<()> {
        if w == 0 {
            return Ok(());
        }
        if w < 0 {
            // A pole inside: nothing to refine, report it.
            self.unresolved.push((r.contour(), w));
            return Ok(());
        }
        let size = r.size();
        // A simple zero is unique in its box: try Newton before splitting.
        if w == 1 {
            if let Some(k) = self.newton(&r, 1)? {
                if r.contains(k, 0.0) {
                    return self.record(&r, 1, k);
                }
            }
        }
        if size <= self.opts.min_box {
            let k = self
                .newton(&r, w)?
                .filter(|k| r.contains(*k, 0.0))
                .unwrap_or(r.centre());
            return self.record(&r, w, k);
        }
        for attempt in 0..=self.opts.max_retries {
            let shift = 0.013 * attempt as f64;
            let kids = r.split(shift);
            let windings: Result<Vec<i64>> = kids.iter().map(|c| self.winding(c)).collect();
            match windings {
                Ok(ws) if ws.iter().sum::<i64>() == w => {
                    for (c, wc) in kids.into_iter().zip(ws) {
                        self.process(c, wc)?;
                    }
                    return Ok(());
                }
                Ok(_) | Err(Error::ContourUnsafe(_)) | Err(Error::NonIntegerIndex { .. }) => {
                    continue
                }
                Err(e) => return Err(e),
            }
        }
        self.unresolved.push((r.contour(), w));
        Ok(())
    }
}

/// Zeros of exp(f) inside the rectangle [lo, hi] of the k-plane.
pub fn find_zeros(
    f: &LogFn<'_>,
    lo: c64,
    hi: c64,
    opts: ZeroSearch,
    mass: f64,
    threshold: Threshold,
) -> Result<SearchOutcome> {
    if !(hi.re > lo.re && hi.im > lo.im) {
        return Err(Error::InvalidParameter(
            "search rectangle must have lo < hi".into(),
        ));
    }
    // Parent and child boxes share boundary samples.
    let cache: Mutex<HashMap<(i64, i64), c64>> = Mutex::new(HashMap::new());
    let scale = (hi - lo).norm();
    let cached = |k: c64| -> Result<c64> {
        let key = (
            (k.re / scale * 1e13).round() as i64,
            (k.im / scale * 1e13).round() as i64,
        );
        if let Some(v) = cache.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = f(k)?;
        cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    };
    let mut s = Searcher {
        f: &cached,
        opts,
        mass,
        threshold,
        zeros: Vec::new(),
        unresolved: Vec::new(),
    };
    let mut region = Rect { lo, hi };
    let mut total = None;
    for attempt in 0..=opts.max_retries {
        match s.winding(&region) {
            Ok(w) => {
                total = Some(w);
                break;
            }
            Err(Error::ContourUnsafe(_)) | Err(Error::NonIntegerIndex { .. })
                if attempt < opts.max_retries =>
            {
                let grow = c64::new(1.0, 1.0) * (0.1 * opts.min_box.max(1e-4 * region.size()));
                region = Rect {
                    lo: region.lo - grow,
                    hi: region.hi + grow,
                };
            }
            Err(e) => return Err(e),
        }
    }
    let total = total.expect("loop either sets the winding or returns");
    s.process(region, total)?;
    Ok(SearchOutcome {
        zeros: s.zeros,
        unresolved: s.unresolved,
        total_winding: total,
    })
}

/// ln det_q(I + T) on one channel as a function of k.
pub fn channel_log_det<'a>(
    bs: &'a BirmanSchwinger<'a>,
    channel: usize,
    threshold: Threshold,
    backend: Backend,
    q: u32,
) -> impl Fn(c64) -> Result<c64> + Sync + 'a {
    move |k: c64| {
        let t = bs.channel_operator(channel, EvalPoint::K { k, threshold }, backend)?;
        let minus = linalg::scaled(t.as_ref(), c64::new(-1.0, 0.0));
        det_index::log_det_reg(minus.as_ref(), q)
    }
}

/// Zeros of the full determinant, searched channel by channel (in parallel
/// on the current rayon pool).
pub fn find_zeros_bs(
    bs: &BirmanSchwinger<'_>,
    threshold: Threshold,
    backend: Backend,
    lo: c64,
    hi: c64,
    opts: ZeroSearch,
) -> Result<SearchOutcome> {
    let per_channel: Vec<SearchOutcome> = (0..bs.factors.len())
        .into_par_iter()
        .map(|c| {
            let f = channel_log_det(bs, c, threshold, backend, opts.q);
            find_zeros(&f, lo, hi, opts, bs.disc.params.mass, threshold)
        })
        .collect::<Result<_>>()?;
    let mut out = SearchOutcome {
        zeros: Vec::new(),
        unresolved: Vec::new(),
        total_winding: 0,
    };
    for (c, r) in per_channel.into_iter().enumerate() {
        out.total_winding += r.total_winding;
        out.unresolved.extend(r.unresolved);
        out.zeros.extend(r.zeros.into_iter().map(|mut z| {
            z.channel = Some(c);
            z
        }));
    }
    Ok(out)
}

/// N(Ω): multiplicities of zeros whose k lies in Ω.
pub fn counting_function(zeros: &[ZeroRecord], omega: &Region) -> i64 {
    zeros
        .iter()
        .filter(|z| omega.contains(z.point.k))
        .map(|z| z.multiplicity)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_log(roots: Vec<c64>) -> impl Fn(c64) -> Result<c64> + Sync {
        move |k: c64| {
            let v: c64 = roots.iter().map(|r| k - r).product();
            Ok(c64::new(v.norm().ln(), v.arg()))
        }
    }

    #[test]
    fn polynomial_roots_with_multiplicity() {
        let roots = vec![
            c64::new(0.31, 0.22),
            c64::new(0.6, 0.7),
            c64::new(0.6, 0.7),
            c64::new(0.9, 0.13),
        ];
        let f = poly_log(roots);
        let out = find_zeros(
            &f,
            c64::new(0.05, 0.05),
            c64::new(1.0, 1.0),
            ZeroSearch::default(),
            1.0,
            Threshold::Upper,
        )
        .unwrap();
        assert_eq!(out.total_winding, 4);
        assert!(out.is_resolved());
        let total: i64 = out.zeros.iter().map(|z| z.multiplicity).sum();
        assert_eq!(total, 4);
        assert!(out
            .zeros
            .iter()
            .any(|z| (z.point.k - c64::new(0.31, 0.22)).norm() < 1e-10));
        let dbl = out
            .zeros
            .iter()
            .find(|z| z.multiplicity == 2)
            .expect("double root");
        assert!((dbl.point.k - c64::new(0.6, 0.7)).norm() < 1e-6);
    }

    #[test]
    fn zero_free_region() {
        let f = |k: c64| Ok(k * 0.5);
        let out = find_zeros(
            &f,
            c64::new(0.1, 0.1),
            c64::new(1.0, 1.0),
            ZeroSearch::default(),
            1.0,
            Threshold::Upper,
        )
        .unwrap();
        assert!(out.zeros.is_empty());
        let omega = Region::Disc {
            center: c64::ZERO,
            radius: 10.0,
        };
        assert_eq!(counting_function(&out.zeros, &omega), 0);
    }
}
