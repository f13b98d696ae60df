//! Cylinder events, inclusion-exclusion probabilities and the tile/lozenge
//! dictionaries connecting path statistics to tiling statistics.
//!
//! Tile probabilities reduce to finite sums of one-point densities: a path
//! crossing a height boundary changes the particle count above (or below) it
//! by one, and the packs are bounded on one side, so the counting telescopes.
//! For the Aztec models heights are bounded above by `-1`; for the hexagon
//! bottom process they are bounded below by `0`.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::kernels::Site;
use crate::models::enumerate::DominoKind;
use num_complex::Complex64;

/// Finite occupancy pattern: all `occupied` sites hold particles, all
/// `vacant` sites do not.
#[derive(Debug, Clone, Default)]
pub struct CylinderEvent {
    pub occupied: Vec<Site>,
    pub vacant: Vec<Site>,
}

/// Probability of a cylinder event by inclusion-exclusion over the vacant
/// set: `sum_{S subset vacant} (-1)^{|S|} det K[occupied + S]`. The kernel is
/// queried through a scalar evaluator on site pairs.
pub fn cylinder_probability<K>(kernel: &K, event: &CylinderEvent) -> Result<f64>
where
    K: Fn(Site, Site) -> Result<Complex64>,
{
    if event.vacant.len() > 20 {
        return Err(Error::Budget(format!(
            "vacant set of {} sites is too large for inclusion-exclusion",
            event.vacant.len()
        )));
    }
    for o in &event.occupied {
        if event.vacant.contains(o) {
            return Ok(0.0);
        }
    }
    let mut total = 0.0;
    let v = event.vacant.len();
    for mask in 0u32..(1 << v) {
        let mut sites = event.occupied.clone();
        for (i, s) in event.vacant.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sites.push(*s);
            }
        }
        let k = sites.len();
        let mut m = CMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = kernel(sites[i], sites[j])?;
            }
        }
        let det = m.det();
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * det.re;
    }
    Ok(total)
}

/// One-point density at a site.
pub fn density<K>(kernel: &K, s: Site) -> Result<f64>
where
    K: Fn(Site, Site) -> Result<Complex64>,
{
    let v = kernel(s, s)?;
    Ok(v.re)
}

/// Probability that a path crosses the height boundary between `u - 1` and
/// `u` during transition `m` (levels `m - 1 -> m`) in a *downward* model
/// whose heights are bounded above by `top`:
/// `sum_{v >= u} [rho(m-1, v) - rho(m, v)]`.
pub fn down_crossing_probability<K>(kernel: &K, m: usize, u: i64, top: i64) -> Result<f64>
where
    K: Fn(Site, Site) -> Result<Complex64>,
{
    let mut acc = 0.0;
    for v in u..=top {
        acc += density(kernel, Site::new(m - 1, v))? - density(kernel, Site::new(m, v))?;
    }
    Ok(acc)
}

/// Probability that a path crosses the boundary between `u` and `u + 1`
/// upward during transition `m` in an *upward* model bounded below by
/// `bottom`: `sum_{v <= u} [rho(m-1, v) - rho(m, v)]`.
pub fn up_crossing_probability<K>(kernel: &K, m: usize, u: i64, bottom: i64) -> Result<f64>
where
    K: Fn(Site, Site) -> Result<Complex64>,
{
    let mut acc = 0.0;
    for v in bottom..=u {
        acc += density(kernel, Site::new(m - 1, v))? - density(kernel, Site::new(m, v))?;
    }
    Ok(acc)
}

/// Aztec domino probabilities in terms of path statistics, for models whose
/// odd transitions are Bernoulli down steps and even transitions geometric
/// down steps (all Aztec presets in this crate). A domino whose black square
/// has tile coordinates `(c, x)` in a size-`R` diamond corresponds to the
/// path height `u = x - R` (top-pack coordinates) and:
///
/// - West: stay at the odd transition `2c + 1` at height `u`;
/// - South: down step from `u` at the same transition (equivalently a
///   crossing of the boundary `u-1 | u`: Bernoulli steps drop by one);
/// - East: crossing of `u-1 | u` at the even transition `2c`;
/// - North: the complement at the shared black square,
///   `1 - P_W - P_S - P_E`.
pub fn aztec_tile_probability<K>(
    kernel: &K,
    kind: DominoKind,
    c: usize,
    u: i64,
    top: i64,
) -> Result<f64>
where
    K: Fn(Site, Site) -> Result<Complex64>,
{
    match kind {
        DominoKind::West => {
            let odd = 2 * c + 1;
            let stay = density(kernel, Site::new(odd - 1, u))?
                - down_crossing_probability(kernel, odd, u, top)?;
            Ok(stay)
        }
        DominoKind::South => down_crossing_probability(kernel, 2 * c + 1, u, top),
        DominoKind::East => down_crossing_probability(kernel, 2 * c, u, top),
        DominoKind::North => {
            let w = aztec_tile_probability(kernel, DominoKind::West, c, u, top)?;
            let s = aztec_tile_probability(kernel, DominoKind::South, c, u, top)?;
            let e = aztec_tile_probability(kernel, DominoKind::East, c, u, top)?;
            Ok(1.0 - w - s - e)
        }
    }
}

/// Lozenge kinds of the hexagon models: `Up` carries the horizontal path
/// line (a stay step), `Right` the diagonal line (an up step), `Down` has no
/// line (a vacancy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LozengeKind {
    Up,
    Right,
    Down,
}

/// Lozenge probabilities at `(m, x)` (transition `m`, height `x >= 0`) for
/// the hexagon bottom process.
pub fn lozenge_probability<K>(kernel: &K, kind: LozengeKind, m: usize, x: i64) -> Result<f64>
where
    K: Fn(Site, Site) -> Result<Complex64>,
{
    match kind {
        LozengeKind::Up => {
            let stay =
                density(kernel, Site::new(m - 1, x))? - up_crossing_probability(kernel, m, x, 0)?;
            Ok(stay)
        }
        LozengeKind::Right => up_crossing_probability(kernel, m, x, 0),
        LozengeKind::Down => Ok(1.0 - density(kernel, Site::new(m - 1, x))?),
    }
}

/// Occupancy pattern characterizing a tile where one exists as a plain
/// cylinder event. The no-line tiles are exact vacancy patterns; the
/// line-carrying tiles additionally need the crossing corrections computed by
/// [`aztec_tile_probability`] / [`lozenge_probability`], which the oracle
/// tests pin down.
pub fn tile_event(kind: LozengeKind, m: usize, x: i64) -> CylinderEvent {
    match kind {
        // horizontal path step through the lozenge
        LozengeKind::Up => CylinderEvent {
            occupied: vec![Site::new(m - 1, x), Site::new(m, x)],
            vacant: vec![],
        },
        // diagonal path step
        LozengeKind::Right => CylinderEvent {
            occupied: vec![Site::new(m - 1, x), Site::new(m, x + 1)],
            vacant: vec![],
        },
        // no line: vacancy
        LozengeKind::Down => CylinderEvent {
            occupied: vec![],
            vacant: vec![Site::new(m - 1, x)],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::enumerate::{enumerate_measure, OccupancyEvent, PathGraphInstance};
    use crate::models::presets;
    use crate::symbol::{ElementaryFactor, FactorKind};

    /// Kernel evaluator backed by the enumeration oracle's pair correlations:
    /// rho_2(s, s') entries are not directly a kernel, so instead check the
    /// identities against a finite-kernel evaluator.
    fn finite_kernel_fn(
        e: crate::kernels::FiniteEnsemble,
    ) -> impl Fn(Site, Site) -> crate::error::Result<Complex64> {
        let md = crate::kernels::moment_matrix(&e).unwrap();
        move |s: Site, sp: Site| {
            crate::kernels::scalar_kernel(
                &|q| crate::kernels::finite_kernel(&e, &md, q),
                s,
                sp,
                e.p,
            )
        }
    }

    #[test]
    fn empty_event_has_probability_one() {
        let k = |_s: Site, _sp: Site| Ok(Complex64::new(0.3, 0.0));
        let p = cylinder_probability(&k, &CylinderEvent::default()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_site_event_is_density() {
        let k = |_s: Site, _sp: Site| Ok(Complex64::new(0.3, 0.0));
        let e = CylinderEvent {
            occupied: vec![Site::new(1, 0)],
            vacant: vec![],
        };
        assert!((cylinder_probability(&k, &e).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn contradictory_event_has_probability_zero() {
        let k = |_s: Site, _sp: Site| Ok(Complex64::new(0.3, 0.0));
        let e = CylinderEvent {
            occupied: vec![Site::new(1, 0)],
            vacant: vec![Site::new(1, 0)],
        };
        assert!(cylinder_probability(&k, &e).unwrap().abs() < 1e-12);
    }

    #[test]
    fn complementation_identity() {
        // P(vacant s) = 1 - rho(s) exactly, by the inclusion-exclusion algebra
        let k = |s: Site, sp: Site| {
            Ok(if s == sp {
                Complex64::new(0.42, 0.0)
            } else {
                Complex64::new(0.1, 0.05)
            })
        };
        let e = CylinderEvent {
            occupied: vec![],
            vacant: vec![Site::new(2, 3)],
        };
        assert!((cylinder_probability(&k, &e).unwrap() - 0.58).abs() < 1e-12);
    }

    #[test]
    fn cylinder_probabilities_match_enumeration_on_bernoulli_chain() {
        // p = 1, two Bernoulli-up levels, two paths: every one- and two-site
        // event from the finite kernel matches the exhaustive enumeration
        let f1 = ElementaryFactor::new(FactorKind::BernoulliUp, vec![0.7, 1.3], vec![1.0, 2.0]);
        let _ = f1; // p = 2 factor built below for the second chain
        let fa = ElementaryFactor::new(FactorKind::BernoulliUp, vec![0.7], vec![1.0]).unwrap();
        let fb = ElementaryFactor::new(FactorKind::BernoulliUp, vec![1.6], vec![0.8]).unwrap();
        let paths = 2usize;
        let g = PathGraphInstance {
            p: 1,
            paths,
            m_shift: 1,
            factors: vec![fa.clone(), fb.clone()],
            truncation_tol: 1e-14,
        };
        // events: all single sites and a few patterns at level 1
        let sites = [
            Site::new(1, -1),
            Site::new(1, -2),
            Site::new(1, 0),
            Site::new(1, -3),
        ];
        let mut events: Vec<OccupancyEvent> = sites
            .iter()
            .map(|&s| OccupancyEvent {
                occupied: vec![s],
                vacant: vec![],
            })
            .collect();
        events.push(OccupancyEvent {
            occupied: vec![Site::new(1, -1), Site::new(1, -2)],
            vacant: vec![],
        });
        events.push(OccupancyEvent {
            occupied: vec![Site::new(1, -1)],
            vacant: vec![Site::new(1, -2)],
        });
        let table = enumerate_measure(&g, &events).unwrap();
        // matching finite ensemble: starts at -1, -2 means n = 2 paths with
        // p = 1; the finite kernel uses bottom coordinates (0-based from 0),
        // so shift heights by +paths
        let e = crate::kernels::FiniteEnsemble::new(1, paths, 1, vec![fa, fb]);
        let kf = finite_kernel_fn(e);
        let shift = paths as i64;
        for (idx, ev) in events.iter().enumerate() {
            let shifted = CylinderEvent {
                occupied: ev.occupied.iter().map(|s| Site::new(s.m, s.u + shift)).collect(),
                vacant: ev.vacant.iter().map(|s| Site::new(s.m, s.u + shift)).collect(),
            };
            let from_kernel = cylinder_probability(&kf, &shifted).unwrap();
            let from_oracle = table.event_probability(idx);
            assert!(
                (from_kernel - from_oracle).abs() < 1e-10,
                "event {idx}: kernel {from_kernel} vs oracle {from_oracle}"
            );
        }
    }

    /// Tile probabilities measured from path-step statistics of the oracle.
    fn step_tile_probability(
        table: &crate::models::enumerate::CorrelationTable,
        factors: &[ElementaryFactor],
        kind: crate::models::enumerate::DominoKind,
        c: usize,
        u: i64,
    ) -> f64 {
        use crate::models::enumerate::DominoKind as K;
        match kind {
            K::West => table.step_probability(2 * c + 1, u, u),
            K::South => {
                // Bernoulli down: crossing u-1|u means the step u -> u-1
                table.step_probability(2 * c + 1, u, u - 1)
            }
            K::East => {
                // all steps at the even transition 2c that cross u-1|u
                let mut acc = 0.0;
                let reach = 32i64;
                for from in u..u + reach {
                    for to in (u - reach)..u {
                        acc += table.step_probability(2 * c, from, to);
                    }
                }
                acc
            }
            K::North => {
                1.0 - step_tile_probability(table, factors, K::West, c, u)
                    - step_tile_probability(table, factors, K::South, c, u)
                    - step_tile_probability(table, factors, K::East, c, u)
            }
        }
    }

    /// Domino weights derived from the preset's step weights, so the tiling
    /// enumerator and the path oracle describe the same measure by
    /// construction; the test then validates the coordinate dictionary.
    fn domino_weights_from_preset(
        preset: &crate::models::presets::ModelPreset,
        r_size: i64,
    ) -> impl Fn(crate::models::enumerate::DominoKind, i64, i64) -> f64 + '_ {
        use crate::models::enumerate::step_weight;
        use crate::models::enumerate::DominoKind as K;
        move |kind: K, m: i64, x: i64| -> f64 {
            let u = x - r_size;
            match kind {
                K::North => 1.0,
                K::West => {
                    let f = &preset.factors[(2 * m) as usize];
                    step_weight(f, u, u)
                }
                K::South => {
                    let f = &preset.factors[(2 * m) as usize];
                    step_weight(f, u, u - 1)
                }
                K::East => {
                    // per-height descent factor of the even transition 2m:
                    // crossing u-1|u contributes the slope at height u-1
                    let f = &preset.factors[(2 * m - 1) as usize];
                    let p = f.p() as i64;
                    f.a[(u - 1).rem_euclid(p) as usize]
                }
            }
        }
    }

    #[test]
    fn tile_dictionary_matches_domino_enumeration_uniform() {
        // order-2 uniform diamond: 8 tilings; the path-step dictionary must
        // reproduce every tile probability exactly
        let r_size = 2usize;
        let preset = presets::aztec_p1(1.0, r_size).unwrap();
        let g = PathGraphInstance {
            p: 1,
            paths: r_size + 4,
            m_shift: preset.m_shift,
            factors: preset.factors.clone(),
            truncation_tol: 1e-14,
        };
        let table = enumerate_measure(&g, &[]).unwrap();
        let weights = domino_weights_from_preset(&preset, r_size as i64);
        let dominoes =
            crate::models::enumerate::enumerate_aztec_tilings(r_size, &weights).unwrap();
        assert_eq!(dominoes.tilings, 8);
        use crate::models::enumerate::DominoKind as K;
        for x in 0..r_size as i64 {
            let u = x - r_size as i64;
            for c in 0..r_size {
                for kind in [K::West, K::South] {
                    let from_tiles = dominoes.tile_probability(kind, c as i64, x);
                    let from_steps = step_tile_probability(&table, &preset.factors, kind, c, u);
                    assert!(
                        (from_tiles - from_steps).abs() < 1e-10,
                        "{kind:?} at ({c},{x}): tiles {from_tiles} vs steps {from_steps}"
                    );
                }
            }
            for c in 1..=r_size {
                for kind in [K::East, K::North] {
                    let from_tiles = dominoes.tile_probability(kind, c as i64, x);
                    let from_steps = step_tile_probability(&table, &preset.factors, kind, c, u);
                    assert!(
                        (from_tiles - from_steps).abs() < 1e-10,
                        "{kind:?} at ({c},{x}): tiles {from_tiles} vs steps {from_steps}"
                    );
                }
            }
        }
    }

    #[test]
    fn tile_dictionary_matches_domino_enumeration_two_periodic() {
        // order-4 two-periodic diamond: 1024 weighted tilings
        let r_size = 4usize;
        let preset = presets::aztec_2p(2.0, 0.5, 1.0, 2).unwrap();
        let g = PathGraphInstance {
            p: 2,
            paths: r_size + 4,
            m_shift: preset.m_shift,
            factors: preset.factors.clone(),
            truncation_tol: 1e-14,
        };
        let table = enumerate_measure(&g, &[]).unwrap();
        let weights = domino_weights_from_preset(&preset, r_size as i64);
        let dominoes =
            crate::models::enumerate::enumerate_aztec_tilings(r_size, &weights).unwrap();
        assert_eq!(dominoes.tilings, 1024);
        use crate::models::enumerate::DominoKind as K;
        let mut checked = 0usize;
        for x in 0..r_size as i64 {
            let u = x - r_size as i64;
            for c in 0..r_size {
                for kind in [K::West, K::South] {
                    let from_tiles = dominoes.tile_probability(kind, c as i64, x);
                    let from_steps = step_tile_probability(&table, &preset.factors, kind, c, u);
                    assert!(
                        (from_tiles - from_steps).abs() < 1e-10,
                        "{kind:?} at ({c},{x}): tiles {from_tiles} vs steps {from_steps}"
                    );
                    checked += 1;
                }
            }
            for c in 1..=r_size {
                for kind in [K::East, K::North] {
                    let from_tiles = dominoes.tile_probability(kind, c as i64, x);
                    let from_steps = step_tile_probability(&table, &preset.factors, kind, c, u);
                    assert!(
                        (from_tiles - from_steps).abs() < 1e-10,
                        "{kind:?} at ({c},{x}): tiles {from_tiles} vs steps {from_steps}"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked >= 64);
    }

    #[test]
    fn crossing_formula_matches_enumeration() {
        // two-periodic Aztec, size 2 (n = 1): down-crossing probabilities
        // from the finite kernel agree with direct step statistics
        let preset = presets::aztec_2p(2.0, 0.5, 0.9, 1).unwrap();
        let paths = 6usize;
        let g = PathGraphInstance {
            p: 2,
            paths,
            m_shift: preset.m_shift,
            factors: preset.factors.clone(),
            truncation_tol: 1e-12,
        };
        let table = enumerate_measure(&g, &[]).unwrap();
        let e = crate::kernels::FiniteEnsemble::new(2, (paths / 2).max(1), preset.m_shift, preset.factors.clone());
        let kf = finite_kernel_fn(e);
        let shift = paths as i64;
        // crossing of boundary (-2 | -1) on transition 1 (Bernoulli down)
        let from_kernel = down_crossing_probability(
            &|s: Site, sp: Site| kf(Site::new(s.m, s.u + shift), Site::new(sp.m, sp.u + shift)),
            1,
            -1,
            -1,
        )
        .unwrap();
        // oracle: sum of steps from u >= -1 to v <= -2 at transition 1
        let mut from_oracle = 0.0;
        for u in -1..=-1_i64 {
            for v in -8..=-2_i64 {
                from_oracle += table.step_probability(1, u, v);
            }
        }
        assert!(
            (from_kernel - from_oracle).abs() < 1e-8,
            "kernel {from_kernel} vs oracle {from_oracle}"
        );
    }
}
