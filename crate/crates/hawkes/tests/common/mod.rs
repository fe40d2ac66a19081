//! Shared oracles for the acceptance suite: adaptive quadrature for kernel
//! mass, a naive double-loop likelihood reference, and catalog builders.

use hawkes::{EventCatalog, EventRecord, Kernel, ModelSpec, Projection, QuadratureGrid, SpatialWindow};
use rand::Rng;

/// Recursive adaptive Simpson integration.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol || depth == 0 {
            return left + right + err / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// Numeric space-time mass of a constant-parameter kernel: outer adaptive
/// Simpson over the temporal lag, inner radial adaptive Simpson about the
/// kernel's spatial center. Independent of the analytic normalization.
pub fn kernel_mass_oracle(k: &Kernel) -> f64 {
    let (beta, center, sd_of_dt): (f64, (f64, f64), Box<dyn Fn(f64) -> f64>) = match k {
        Kernel::G1 { beta, phi, .. } => (*beta, (0.0, 0.0), Box::new({
            let phi = *phi;
            move |_| phi
        })),
        Kernel::G2 { beta, phi, m, .. } => (*beta, *m, Box::new({
            let phi = *phi;
            move |_| phi
        })),
        Kernel::G3 {
            beta, phi, m, gamma, ..
        } => (*beta, *m, Box::new({
            let (phi, beta, gamma) = (*phi, *beta, *gamma);
            move |dt: f64| phi * (1.0 + dt / beta).powf(0.5 * gamma)
        })),
        _ => panic!("oracle only covers constant-parameter kernels"),
    };
    let t_max = match k {
        Kernel::G1 {
            temporal: hawkes::TemporalFamily::HalfNormal,
            ..
        } => 10.0 * beta,
        _ => 50.0 * beta,
    };
    let slice = |dt: f64| -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        let sd = sd_of_dt(dt);
        let radial = |r: f64| {
            2.0 * std::f64::consts::PI
                * r
                * k.eval(center.0 + r, center.1, dt, 0.0, 0.0, 0.0)
        };
        adaptive_simpson(&radial, 0.0, 10.0 * sd, 1e-11 / t_max)
    };
    adaptive_simpson(&slice, 0.0, t_max, 1e-9)
}

/// Naive O(n^2 + n*grid) log-likelihood with no truncation and plain
/// left-to-right accumulation.
pub fn naive_log_likelihood(model: &ModelSpec, catalog: &EventCatalog, grid: &QuadratureGrid) -> f64 {
    let events = catalog.events();
    let kernels = &model.kernels;
    let mut event_term = 0.0;
    for (i, e) in events.iter().enumerate() {
        let mut lambda = model.backgrounds[e.mark].eval(e.x, e.y, e.t);
        for src in &events[..i] {
            lambda += kernels.entry(src.mark, e.mark).eval(e.x, e.y, e.t, src.x, src.y, src.t);
        }
        event_term += lambda.ln();
    }
    let mut integral = 0.0;
    for tn in &grid.temporal {
        for sn in &grid.spatial {
            let mut total = 0.0;
            for target in 0..catalog.n_marks() {
                total += model.backgrounds[target].eval(sn.x, sn.y, tn.t);
                for src in events {
                    total += kernels
                        .entry(src.mark, target)
                        .eval(sn.x, sn.y, tn.t, src.x, src.y, src.t);
                }
            }
            integral += total * sn.area * tn.dt;
        }
    }
    event_term - integral
}

/// Catalog of uniform random events on a rectangular window, for likelihood
/// equivalence checks.
pub fn random_catalog<R: Rng>(
    rng: &mut R,
    n: usize,
    n_marks: usize,
    half_width_km: f64,
    t_end: f64,
) -> EventCatalog {
    let projection = Projection::new(0.0, 0.0).unwrap();
    let window = SpatialWindow::rect(-half_width_km, half_width_km, -half_width_km, half_width_km)
        .unwrap();
    let mut events: Vec<EventRecord> = (0..n)
        .map(|_| {
            let x = rng.gen_range(-half_width_km..half_width_km);
            let y = rng.gen_range(-half_width_km..half_width_km);
            let (lon, lat) = projection.invert(x, y);
            EventRecord {
                mark: rng.gen_range(0..n_marks),
                lon,
                lat,
                t: rng.gen_range(0.0..t_end),
                specificity: None,
                x,
                y,
            }
        })
        .collect();
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    EventCatalog::new(events, n_marks, t_end, window, projection).unwrap()
}
