//! The manufactured forcing terms are checked against the strong form of the
//! equations evaluated by finite differences of the exact fields.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use triphase::constitutive::{knudsen_conductivity, Phase};
use triphase::mechanics::MechLoading;
use triphase::mesh::BoundaryTag;
use triphase::mms::{MechMms, ThermalMms};
use triphase::thermal::ThermalForcing;
use triphase::{Tensor2, Vec2};

const H: f64 = 1e-4;

fn axis(j: usize) -> Vec2 {
    if j == 0 {
        Vec2::new(H, 0.0)
    } else {
        Vec2::new(0.0, H)
    }
}

fn grad_vec(u: &dyn Fn(Vec2) -> Vec2, x: Vec2) -> Tensor2 {
    let mut g = Tensor2::zeros();
    for j in 0..2 {
        let d = (u(x + axis(j)) - u(x - axis(j))) / (2.0 * H);
        g[(0, j)] = d.x;
        g[(1, j)] = d.y;
    }
    g
}

fn grad_scalar(f: &dyn Fn(Vec2) -> f64, x: Vec2) -> Vec2 {
    Vec2::new(
        (f(x + axis(0)) - f(x - axis(0))) / (2.0 * H),
        (f(x + axis(1)) - f(x - axis(1))) / (2.0 * H),
    )
}

fn div_tensor(t: &dyn Fn(Vec2) -> Tensor2, x: Vec2) -> Vec2 {
    let mut out = Vec2::zeros();
    for j in 0..2 {
        let d = (t(x + axis(j)) - t(x - axis(j))) / (2.0 * H);
        out += Vec2::new(d[(0, j)], d[(1, j)]);
    }
    out
}

fn sym(g: Tensor2) -> Tensor2 {
    (g + g.transpose()) * 0.5
}

fn hooke(e: Tensor2, lambda: f64, mu: f64) -> Tensor2 {
    Tensor2::identity() * (lambda * e.trace()) + e * (2.0 * mu)
}

#[test]
fn mechanical_forcing_matches_the_strong_form() {
    let mms = MechMms::standard();
    let p = mms.params;
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..50 {
        let x = Vec2::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
        let t = rng.gen_range(0.0..2.0);
        let us = |y: Vec2| mms.skeleton_displacement(y, t);
        let uf = |y: Vec2| mms.fiber_displacement(y, t);
        let pr = |y: Vec2| mms.pressure(y, t);
        let rel = |y: Vec2| sym(grad_vec(&us, y)) - sym(grad_vec(&uf, y));
        let ts = |y: Vec2| hooke(sym(grad_vec(&us, y)), p.lambda_s, p.mu_s) + rel(y) * p.chi_0;
        let tf = |y: Vec2| hooke(sym(grad_vec(&uf, y)), p.lambda_f, p.mu_f) - rel(y) * p.chi_0;
        let gp = grad_scalar(&pr, x);
        let fs = -div_tensor(&ts, x) + gp * p.fractions.solid;
        let ff = -div_tensor(&tf, x) + gp * p.fractions.fiber;
        let scale = 1.0 + fs.norm() + ff.norm();
        assert!((mms.skeleton_force(x, t) - fs).norm() <= 1e-5 * scale, "{x:?}");
        assert!((mms.fiber_force(x, t) - ff).norm() <= 1e-5 * scale, "{x:?}");

        // storage and divergence rates: every field is (1 + t) times a profile
        let div = |u: &dyn Fn(Vec2) -> Vec2, y: Vec2| grad_vec(u, y).trace();
        let us1 = |y: Vec2| mms.skeleton_displacement(y, t + 1.0) - mms.skeleton_displacement(y, t);
        let uf1 = |y: Vec2| mms.fiber_displacement(y, t + 1.0) - mms.fiber_displacement(y, t);
        let dp_dt = mms.pressure(x, t + 1.0) - mms.pressure(x, t);
        let lap_p = {
            let g = |y: Vec2| grad_scalar(&pr, y);
            (g(x + axis(0)).x - g(x - axis(0)).x + g(x + axis(1)).y - g(x - axis(1)).y) / (2.0 * H)
        };
        let g = p.c0 * dp_dt + p.fractions.solid * div(&us1, x) + p.fractions.fiber * div(&uf1, x) - p.k * lap_p;
        assert!((mms.mass_source(x, t) - g).abs() <= 1e-5 * (1.0 + g.abs()), "{x:?}");
    }
}

fn gas_like(mms: &ThermalMms, phase: Phase, y: Vec2) -> f64 {
    let p = &mms.params;
    let kappa = match phase {
        Phase::Solid => p.kappa_s,
        Phase::Fiber => p.kappa_f,
        Phase::Gas => knudsen_conductivity(p.pore_size.at(y), p.l_g, p.beta, p.kappa_bg).unwrap(),
    };
    p.fractions.get(phase) * kappa
}

#[test]
fn thermal_forcing_matches_the_strong_form() {
    let mms = ThermalMms::standard();
    let p = mms.params;
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..50 {
        let x = Vec2::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
        let t = rng.gen_range(0.0..2.0);
        for phase in Phase::ALL {
            let theta = |y: Vec2| mms.temperature(phase, y, t);
            let flux = |y: Vec2| grad_scalar(&theta, y) * gas_like(&mms, phase, y);
            let div_flux = (flux(x + axis(0)).x - flux(x - axis(0)).x + flux(x + axis(1)).y - flux(x - axis(1)).y)
                / (2.0 * H);
            let rate = mms.temperature(phase, x, t + 1.0) - mms.temperature(phase, x, t);
            let mut gain = 0.0;
            for other in Phase::ALL {
                if other != phase {
                    let d = mms.temperature(other, x, t) - theta(x);
                    gain += p.exchange.pair(phase, other) * d.powi(3);
                }
            }
            let f = p.capacity(phase) * rate - div_flux - gain;
            assert!((mms.volume(phase, x, t) - f).abs() <= 1e-5 * (1.0 + f.abs()), "{phase:?} at {x:?}");
        }
    }
    for tag in BoundaryTag::ALL {
        for _ in 0..20 {
            let s: f64 = rng.gen_range(0.0..1.0);
            let x = match tag {
                BoundaryTag::Bottom => Vec2::new(s, 0.0),
                BoundaryTag::Top => Vec2::new(s, 1.0),
                BoundaryTag::Left => Vec2::new(0.0, s),
                BoundaryTag::Right => Vec2::new(1.0, s),
            };
            let t = rng.gen_range(0.0..2.0);
            let ambient = match tag {
                BoundaryTag::Top => Some(p.theta_hot),
                BoundaryTag::Bottom => Some(p.theta_cold),
                _ => None,
            };
            for phase in Phase::ALL {
                let theta = |y: Vec2| mms.temperature(phase, y, t);
                let normal_flux = gas_like(&mms, phase, x) * grad_scalar(&theta, x).dot(&tag.normal());
                let robin = ambient.map_or(0.0, |a| p.fractions.get(phase) * p.h_air * (theta(x) - a));
                let g = normal_flux + robin;
                assert!((mms.boundary(phase, tag, x, t) - g).abs() <= 1e-6 * (1.0 + g.abs()), "{phase:?} on {tag:?}");
            }
        }
    }
}
