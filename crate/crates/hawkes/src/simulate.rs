//! Exact samplers for multivariate spatio-temporal Hawkes models: a cluster
//! (branching) sampler and an Ogata-style thinning sampler. The two agree in
//! distribution, which makes each a test oracle for the other and for the
//! likelihood machinery.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::background::BackgroundSpec;
use crate::catalog::{EventCatalog, EventRecord};
use crate::error::{HawkesError, Result};
use crate::geo::{Projection, SpatialWindow};
use crate::kernel::{Kernel, TemporalFamily};
use crate::model::ModelSpec;

/// What to do with offspring that fall outside the space-time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgePolicy {
    /// Discard them (matches the likelihood's domain of integration).
    Clip,
    /// Keep everything; the output catalog's window and horizon are expanded
    /// to cover all generated points. Useful for branching-ratio checks,
    /// which need the full cluster sizes.
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub window: SpatialWindow,
    pub t_end: f64,
    pub seed: u64,
    pub edge: EdgePolicy,
    pub projection: Projection,
}

/// Expected-event cap: thinning aborts if the intensity bound implies more
/// candidates than this.
const MAX_EXPECTED_CANDIDATES: f64 = 5e7;

fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    if mean > MAX_EXPECTED_CANDIDATES {
        return Err(HawkesError::BoundOverflow {
            n: usize::MAX,
            bound: mean,
        });
    }
    Ok(Poisson::new(mean)
        .map_err(|e| HawkesError::Domain(format!("bad Poisson mean {mean}: {e}")))?
        .sample(rng) as usize)
}

/// Upper bound for a background over the window and `[0, t_end)`.
fn background_bound(b: &BackgroundSpec, t_end: f64) -> f64 {
    match b {
        BackgroundSpec::Constant { mu0 } => *mu0,
        BackgroundSpec::TimeLinear { mu0, mu1, t_end: t0 } => {
            mu0.max(mu0 + mu1 * (t_end / t0)).max(0.0)
        }
        BackgroundSpec::CovariateLinear { mu0, mu1, cov } => {
            let (lo, hi) = cov.observed_range();
            (mu0 + mu1 * lo).max(mu0 + mu1 * hi).max(0.0)
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SimEvent {
    mark: usize,
    x: f64,
    y: f64,
    t: f64,
}

/// Generation 0: inhomogeneous Poisson draws from each mark's background
/// over window x [0, t_end), by thinning against the background bound.
fn sample_background(
    model: &ModelSpec,
    window: &SpatialWindow,
    t_end: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SimEvent>> {
    let (x0, x1, y0, y1) = window.bbox();
    let bbox_area = (x1 - x0) * (y1 - y0);
    let mut out = Vec::new();
    for (mark, b) in model.backgrounds.iter().enumerate() {
        let bound = background_bound(b, t_end);
        let n = poisson_draw(rng, bound * bbox_area * t_end)?;
        for _ in 0..n {
            let x = rng.gen_range(x0..x1);
            let y = rng.gen_range(y0..y1);
            let t = rng.gen_range(0.0..t_end);
            if !window.contains(x, y) {
                continue;
            }
            let mu = b.eval(x, y, t);
            if mu > 0.0 && rng.gen::<f64>() * bound < mu {
                out.push(SimEvent { mark, x, y, t });
            }
        }
    }
    Ok(out)
}

fn sample_offspring_of(
    parent: &SimEvent,
    target: usize,
    kernel: &Kernel,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SimEvent>> {
    let (alpha, beta, temporal, m, phi_of_dt): (f64, f64, TemporalFamily, (f64, f64), Box<dyn Fn(f64) -> f64>) =
        match kernel {
            Kernel::Zero => return Ok(Vec::new()),
            Kernel::G1 {
                alpha,
                beta,
                phi,
                temporal,
            } => {
                let p = *phi;
                (*alpha, *beta, *temporal, (0.0, 0.0), Box::new(move |_| p))
            }
            Kernel::G2 { alpha, beta, phi, m } => {
                let p = *phi;
                (*alpha, *beta, TemporalFamily::Exponential, *m, Box::new(move |_| p))
            }
            Kernel::G3 {
                alpha,
                beta,
                phi,
                m,
                gamma,
            } => {
                let (p, b, g) = (*phi, *beta, *gamma);
                (
                    *alpha,
                    *beta,
                    TemporalFamily::Exponential,
                    *m,
                    Box::new(move |dt: f64| p * (1.0 + dt / b).powf(g / 2.0)),
                )
            }
            Kernel::G1NonstatPhi { .. } | Kernel::G1NonstatAlpha { .. } => {
                return Err(HawkesError::Domain(
                    "nonstationary kernels support thinning simulation only".into(),
                ));
            }
        };
    let n = poisson_draw(rng, alpha)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let dt = match temporal {
            TemporalFamily::Exponential => Exp::new(1.0 / beta).unwrap().sample(rng),
            TemporalFamily::HalfNormal => Normal::new(0.0, beta).unwrap().sample(rng).abs(),
        };
        let sd = phi_of_dt(dt);
        let gauss = Normal::new(0.0, sd).unwrap();
        out.push(SimEvent {
            mark: target,
            x: parent.x + m.0 + gauss.sample(rng),
            y: parent.y + m.1 + gauss.sample(rng),
            t: parent.t + dt,
        });
    }
    Ok(out)
}

fn finish_catalog(
    mut events: Vec<SimEvent>,
    cfg: &SimConfig,
    expand: bool,
) -> Result<EventCatalog> {
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    let (window, t_end) = if expand && !events.is_empty() {
        let pts: Vec<(f64, f64)> = events.iter().map(|e| (e.x, e.y)).collect();
        let mut window = SpatialWindow::bbox_of_points(&pts)?;
        // never shrink below the configured window
        let (bx0, bx1, by0, by1) = window.bbox();
        let (cx0, cx1, cy0, cy1) = cfg.window.bbox();
        if bx0 > cx0 || bx1 < cx1 || by0 > cy0 || by1 < cy1 {
            window = SpatialWindow::rect(bx0.min(cx0), bx1.max(cx1), by0.min(cy0), by1.max(cy1))?;
        }
        let t_max = events.last().map(|e| e.t).unwrap_or(0.0);
        (window, cfg.t_end.max(t_max * (1.0 + 1e-9) + 1e-9))
    } else {
        (cfg.window.clone(), cfg.t_end)
    };
    let records = events
        .into_iter()
        .map(|e| {
            let (lon, lat) = cfg.projection.invert(e.x, e.y);
            EventRecord {
                mark: e.mark,
                lon,
                lat,
                t: e.t,
                specificity: None,
                x: e.x,
                y: e.y,
            }
        })
        .collect();
    EventCatalog::new(records, cfg.model.n_marks(), t_end, window, cfg.projection)
}

/// Cluster sampler: background immigrants plus recursive offspring draws.
/// Rejects nonstationary kernels (use [`simulate_thinning`]) and unstable
/// models (via the `ModelSpec` invariants).
pub fn simulate_branching(cfg: &SimConfig) -> Result<EventCatalog> {
    let model = &cfg.model;
    model.kernels.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut all = sample_background(model, &cfg.window, cfg.t_end, &mut rng)?;
    let mut frontier = all.clone();
    let clip = cfg.edge == EdgePolicy::Clip;
    while let Some(parent) = frontier.pop() {
        for target in 0..model.n_marks() {
            let kernel = model.kernels.entry(parent.mark, target);
            for child in sample_offspring_of(&parent, target, kernel, &mut rng)? {
                if clip && (child.t >= cfg.t_end || !cfg.window.contains(child.x, child.y)) {
                    continue;
                }
                all.push(child);
                frontier.push(child);
                if all.len() as f64 > MAX_EXPECTED_CANDIDATES {
                    return Err(HawkesError::BoundOverflow {
                        n: all.len(),
                        bound: MAX_EXPECTED_CANDIDATES,
                    });
                }
            }
        }
    }
    finish_catalog(all, cfg, !clip)
}

/// One component of the thinning bound: either a background or the
/// triggering of one history event toward one target mark.
fn temporal_factor(kernel: &Kernel, dt: f64) -> f64 {
    match kernel {
        Kernel::Zero => 0.0,
        Kernel::G1 { beta, temporal, .. } => temporal.density(dt, *beta),
        Kernel::G2 { beta, .. } | Kernel::G3 { beta, .. } => {
            TemporalFamily::Exponential.density(dt, *beta)
        }
        Kernel::G1NonstatPhi { beta, .. } | Kernel::G1NonstatAlpha { beta, .. } => {
            TemporalFamily::Exponential.density(dt, *beta)
        }
    }
}

/// Whether kernels permit exact component-wise location sampling (constant
/// parameters, proper spatial densities).
fn componentwise_ok(model: &ModelSpec) -> bool {
    !model.kernels.needs_covariate()
}

/// Ogata-style thinning sampler over window x [0, t_end). Exact in
/// distribution. For models with constant-parameter kernels the spatial
/// draw is component-wise (background vs a specific parent); nonstationary
/// kernels fall back to a pointwise space-time bound.
pub fn simulate_thinning(cfg: &SimConfig) -> Result<EventCatalog> {
    let model = &cfg.model;
    model.kernels.validate()?;
    let n_marks = model.n_marks();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (x0, x1, y0, y1) = cfg.window.bbox();
    let bbox_area = (x1 - x0) * (y1 - y0);
    let mu_bounds: Vec<f64> = model
        .backgrounds
        .iter()
        .map(|b| background_bound(b, cfg.t_end))
        .collect();
    let componentwise = componentwise_ok(model);

    // pointwise spatial peak of each kernel entry per unit temporal density,
    // used only in the fallback mode
    let spatial_peak = |k: &Kernel| -> f64 {
        match k {
            Kernel::Zero => 0.0,
            Kernel::G1 { alpha, phi, .. }
            | Kernel::G2 { alpha, phi, .. }
            | Kernel::G3 { alpha, phi, .. } => alpha / (crate::kernel::TWO_PI * phi * phi),
            Kernel::G1NonstatPhi {
                alpha, phi0, phi1, cov, ..
            } => {
                let (lo, hi) = cov.observed_range();
                let phi_min = (phi0 + phi1 * lo).min(phi0 + phi1 * hi);
                alpha / (crate::kernel::TWO_PI * phi_min * phi_min)
            }
            Kernel::G1NonstatAlpha { alpha0, phi, cov, .. } => {
                let (lo, hi) = cov.observed_range();
                let a_max = (alpha0 * lo).abs().max((alpha0 * hi).abs()).max(alpha0.abs());
                a_max / (crate::kernel::TWO_PI * phi * phi)
            }
        }
    };

    let mut events: Vec<SimEvent> = Vec::new();
    let mut t = 0.0;
    let mut total_candidates = 0.0f64;
    loop {
        // intensity bound valid for all times >= t (temporal densities are
        // nonincreasing and the history is frozen until the next acceptance)
        let mut bound = 0.0;
        for k in 0..n_marks {
            bound += mu_bounds[k] * bbox_area;
            for e in &events {
                let kernel = model.kernels.entry(e.mark, k);
                let f = temporal_factor(kernel, (t - e.t).max(1e-12));
                bound += if componentwise {
                    kernel.productivity().abs() * f
                } else {
                    spatial_peak(kernel) * f * bbox_area
                };
            }
        }
        if bound <= 0.0 {
            break;
        }
        total_candidates += 1.0;
        if total_candidates > MAX_EXPECTED_CANDIDATES {
            return Err(HawkesError::BoundOverflow {
                n: events.len(),
                bound,
            });
        }
        t += Exp::new(bound).unwrap().sample(&mut rng);
        if t >= cfg.t_end {
            break;
        }

        if componentwise {
            // weights: per-mark background plus per-(parent, mark) triggers
            let mut weights: Vec<(f64, usize, Option<usize>)> = Vec::new();
            let mut total = 0.0;
            for k in 0..n_marks {
                let w = mu_bounds[k] * bbox_area;
                total += w;
                weights.push((w, k, None));
                for (i, e) in events.iter().enumerate() {
                    if e.t >= t {
                        continue;
                    }
                    let kernel = model.kernels.entry(e.mark, k);
                    let w = kernel.productivity().abs() * temporal_factor(kernel, t - e.t);
                    if w > 0.0 {
                        total += w;
                        weights.push((w, k, Some(i)));
                    }
                }
            }
            // accept the candidate time with probability total / bound
            if rng.gen::<f64>() * bound > total {
                continue;
            }
            // pick a component and draw its location
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = weights.len() - 1;
            for (i, (w, _, _)) in weights.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            let (_, mark, parent) = weights[chosen];
            let (x, y) = match parent {
                None => {
                    let x = rng.gen_range(x0..x1);
                    let y = rng.gen_range(y0..y1);
                    // thin the background proposal down to mu(x, y, t)
                    let mu = model.backgrounds[mark].eval(x, y, t).max(0.0);
                    if !(rng.gen::<f64>() * mu_bounds[mark] < mu) {
                        continue;
                    }
                    (x, y)
                }
                Some(i) => {
                    let e = events[i];
                    let kernel = model.kernels.entry(e.mark, mark);
                    let dt = t - e.t;
                    let (m, sd) = match kernel {
                        Kernel::G1 { phi, .. } => ((0.0, 0.0), *phi),
                        Kernel::G2 { phi, m, .. } => (*m, *phi),
                        Kernel::G3 { phi, m, beta, gamma, .. } => {
                            (*m, phi * (1.0 + dt / beta).powf(gamma / 2.0))
                        }
                        _ => unreachable!("componentwise mode has constant-parameter kernels"),
                    };
                    let gauss = Normal::new(0.0, sd).unwrap();
                    (e.x + m.0 + gauss.sample(&mut rng), e.y + m.1 + gauss.sample(&mut rng))
                }
            };
            // clip to the observation window
            if !cfg.window.contains(x, y) {
                continue;
            }
            events.push(SimEvent { mark, x, y, t });
        } else {
            // pointwise fallback: uniform location proposal over the bbox
            let x = rng.gen_range(x0..x1);
            let y = rng.gen_range(y0..y1);
            if !cfg.window.contains(x, y) {
                continue;
            }
            // per-mark intensities at the proposal point
            let mut lams = Vec::with_capacity(n_marks);
            let mut lam_total = 0.0;
            for k in 0..n_marks {
                let mut lam = model.backgrounds[k].eval(x, y, t).max(0.0);
                for e in &events {
                    lam += model.kernels.entry(e.mark, k).eval(x, y, t, e.x, e.y, e.t);
                }
                lams.push(lam);
                lam_total += lam;
            }
            let accept = lam_total * bbox_area / bound;
            if rng.gen::<f64>() >= accept.min(1.0) {
                continue;
            }
            let mut u = rng.gen::<f64>() * lam_total;
            let mut mark = n_marks - 1;
            for (k, lam) in lams.iter().enumerate() {
                if u < *lam {
                    mark = k;
                    break;
                }
                u -= lam;
            }
            events.push(SimEvent { mark, x, y, t });
        }
    }
    finish_catalog(events, cfg, false)
}
