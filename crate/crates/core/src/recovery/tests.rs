use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::aperture::{msequence, ApertureCode};
use crate::fourier::{Convolver1d, Convolver2d};
use crate::hsi::{linear_grid, CubeGeometry, HsiCube};
use crate::krylov::{lanczos, reconstruct, ExactCube, KrylovConfig};
use crate::optics::{blur_cube, make_kernels, OpticalParams};

fn norm(v: &[f64]) -> f64 {
    crate::linalg::norm2(v)
}

fn mseq_kernel(degree: u32) -> Vec<f64> {
    let bits = msequence(degree).unwrap();
    let k: Vec<f64> = bits.iter().map(|b| *b as f64).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn gaussian(n: usize, centre: f64, width: f64) -> Vec<f64> {
    (0..n).map(|i| (-((i as f64 - centre) / width).powi(2) / 2.0).exp()).collect()
}

fn noise(v: &mut [f64], sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    v.iter_mut().for_each(|x| *x += sigma * rng.sample::<f64, _>(StandardNormal));
}

/// Dense "same"-size convolution matrix, built entry by entry.
fn conv_matrix(kernel: &[f64], n: usize) -> DMatrix<f64> {
    let off = crate::fourier::same_offset(kernel.len()) as isize;
    DMatrix::from_fn(n, n, |i, j| {
        let t = i as isize + off - j as isize;
        if t >= 0 && (t as usize) < kernel.len() {
            kernel[t as usize]
        } else {
            0.0
        }
    })
}

#[test]
fn wiener_impulse_is_identity() {
    let y: Vec<f64> = (0..17).map(|i| (i as f64 * 0.7).sin()).collect();
    let out = wiener_deconv_1d_raw(&y, &[1.0], 0.0).unwrap();
    for (a, b) in out.iter().zip(&y) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(wiener_deconv_1d_raw(&y, &[0.0, 0.0], 0.0).is_err());
    assert!(wiener_deconv_1d_raw(&y, &[1.0], -1.0).is_err());
}

#[test]
fn wiener_inverts_invertible_blur() {
    let k = mseq_kernel(4);
    let n = 80;
    let mut x = gaussian(n, 30.0, 4.0);
    x.iter_mut().zip(gaussian(n, 50.0, 1.5)).for_each(|(a, b)| *a += 0.7 * b);
    let y = Convolver1d::new(&k, n).same(&x);
    for nsr in [0.0, 1e-12] {
        let xh = wiener_deconv_1d_raw(&y, &k, nsr).unwrap();
        assert!(rsnr(&x, &xh).unwrap() >= 100.0, "nsr {nsr}");
    }
}

#[test]
fn wiener_2d_exact_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (kx, ky) = (5, 3);
    let psf = SpatialPsf {
        kx,
        ky,
        values: (0..kx * ky).map(|_| rng.random::<f64>() + 0.1).collect(),
    };
    let (nx, ny) = (24, 20);
    let mut img = vec![0.0; nx * ny];
    for y in 3..ny - 3 {
        for x in 4..nx - 4 {
            img[x + nx * y] = rng.random();
        }
    }
    let blurred = Convolver2d::new(&psf.values, kx, ky, nx, ny).same(&img);
    let out = wiener_deconv_2d_raw(&blurred, nx, ny, &psf.values, kx, ky, 0.0).unwrap();
    assert!(rsnr(&img, &out).unwrap() > 150.0);
}

#[test]
fn l2_unregularized_matches_direct_inverse() {
    let k = mseq_kernel(3);
    let n = 40;
    let x = gaussian(n, 20.0, 5.0);
    let y = Convolver1d::new(&k, n).same(&x);
    let (v, rep) = l2_smooth_deconv_raw(&y, &k, 0.0, 1e-12, 5000).unwrap();
    assert!(rep.converged);
    let a = conv_matrix(&k, n);
    let direct = a.clone().lu().solve(&DVector::from_vec(y.clone())).unwrap();
    // the normal equations square the conditioning, so compare in data space
    let diff = &a * (DVector::from_vec(v) - &direct);
    assert!(diff.norm() < 1e-8 * norm(&y), "diff {}", diff.norm());
}

#[test]
fn l2_satisfies_normal_equations() {
    let k = mseq_kernel(3);
    let n = 33;
    let mut y = gaussian(n, 12.0, 3.0);
    noise(&mut y, 0.05, 1);
    let eta = 0.7;
    let tol = 1e-10;
    let (v, _) = l2_smooth_deconv_raw(&y, &k, eta, tol, 5000).unwrap();
    // dense oracle: D is the forward difference with a zero last row
    let a = conv_matrix(&k, n);
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 < n && j == i + 1 {
            1.0
        } else if i + 1 < n && j == i {
            -1.0
        } else {
            0.0
        }
    });
    let lhs = (a.transpose() * &a + 2.0 * eta * d.transpose() * &d) * DVector::from_vec(v);
    let rhs = a.transpose() * DVector::from_vec(y);
    assert!((lhs - &rhs).norm() <= tol * rhs.norm() * 10.0);
}

#[test]
fn l2_large_eta_kills_variation() {
    let k = mseq_kernel(3);
    let n = 30;
    let mut y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.9).sin()).collect();
    let m = y.iter().sum::<f64>() / n as f64;
    y.iter_mut().for_each(|v| *v -= m);
    let spread = |eta: f64| {
        let (v, _) = l2_smooth_deconv_raw(&y, &k, eta, 1e-12, 10_000).unwrap();
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt()
    };
    let (a, b, c) = (spread(1.0), spread(1e4), spread(1e8));
    assert!(a > b && b > c && c < 1e-6, "{a} {b} {c}");
}

#[test]
fn smoothness_weight_matches_spectrum_type() {
    let bits = vec![1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0];
    let code = ApertureCode::new(bits, 30.0, 6.4).unwrap();
    let k = crate::optics::spectral_kernel(&code, 1.0, 1.0);
    let n = 120;
    // tungsten-like: smooth ramp; CFL-like: a few narrow lines
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (0.2 + t) * (-(t - 0.7).powi(2) * 3.0).exp()
        })
        .collect();
    let mut peaky = vec![0.02; n];
    for (c, a) in [(30usize, 1.0), (55, 0.6), (58, 0.8), (90, 0.5)] {
        peaky[c] += a;
    }
    let run = |x: &[f64], eta: f64| {
        let mut y = Convolver1d::new(&k, n).same(x);
        let peak = y.iter().cloned().fold(0.0, f64::max);
        noise(&mut y, peak * 1e-2, 3);
        let s = y.iter().cloned().fold(0.0, f64::max);
        let unit: Vec<f64> = y.iter().map(|v| v / s).collect();
        let (v, _) = l2_smooth_deconv_raw(&unit, &k, eta, 1e-10, 20_000).unwrap();
        let v: Vec<f64> = v.iter().map(|a| a * s).collect();
        rsnr(x, &v).unwrap()
    };
    // η is only meaningful relative to the kernel normalization and grid;
    // with a unit-sum kernel on a 1 nm grid the pair (10³, 1) maps to (1, 10⁻³)
    let c = 1e-3;
    let (smooth_eta, peaky_eta) = (1e3 * c, 1.0 * c);
    assert!(run(&smooth, smooth_eta) > run(&smooth, peaky_eta));
    assert!(run(&peaky, peaky_eta) > run(&peaky, smooth_eta));
}

#[test]
fn tv_without_weight_and_blur_returns_input() {
    let (nx, ny) = (9, 7);
    let y: Vec<f64> = (0..nx * ny).map(|i| (i as f64 * 0.37).cos()).collect();
    let (out, _) = tv_deconv_2d_raw(&y, nx, ny, &SpatialPsf::impulse(), 0.0, 20).unwrap();
    for (a, b) in out.iter().zip(&y) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn bars(nx: usize, ny: usize) -> Vec<f64> {
    let mut img = vec![0.1; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            let i = x + nx * y;
            if (8..24).contains(&y) && (x / 4) % 2 == 0 && (6..nx - 6).contains(&x) {
                img[i] = 1.0;
            }
            if (30..ny - 6).contains(&y) && (10..nx - 10).contains(&x) {
                img[i] = 0.6;
            }
        }
    }
    img
}

#[test]
fn tv_objective_is_monotone_and_beats_wiener() {
    let p = OpticalParams {
        pixel_um: 50.0,
        ..OpticalParams::default()
    };
    let code = ApertureCode::from_bits(vec![1, 1, 0, 1, 0, 0, 1, 1]).unwrap();
    let psf = crate::optics::spatial_psf_at(&code, &p, 500.0).unwrap();
    let (nx, ny) = (48, 48);
    let img = bars(nx, ny);
    let mut y = Convolver2d::new(&psf.values, psf.kx, psf.ky, nx, ny).same(&img);
    let peak = y.iter().cloned().fold(0.0, f64::max);
    noise(&mut y, peak / 100.0, 8); // 40 dB
    let (tv, rep) = tv_deconv_2d_raw(&y, nx, ny, &psf, 2e-3, 150).unwrap();
    assert!(rep.objective.windows(2).all(|w| w[1] <= w[0]));
    assert!(rep.objective.last() < rep.objective.first());
    let best_wiener = [1e-4, 1e-3, 1e-2, 1e-1]
        .iter()
        .map(|nsr| {
            let w = wiener_deconv_2d_raw(&y, nx, ny, &psf.values, psf.kx, psf.ky, *nsr).unwrap();
            rsnr(&img, &w).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let tv_rsnr = rsnr(&img, &tv).unwrap();
    assert!(tv_rsnr >= best_wiener, "tv {tv_rsnr} wiener {best_wiener}");
}

#[test]
fn metric_basics() {
    let x = vec![1.0, -2.0, 3.0];
    assert_eq!(rsnr(&x, &x).unwrap(), RSNR_CAP_DB);
    assert!(rsnr(&x, &[0.0; 3]).unwrap().abs() < 1e-12);
    assert!(rsnr(&[0.0; 3], &x).is_err());
    assert!((sam(&[1.0, 0.0], &[0.0, 2.0]).unwrap() - 90.0).abs() < 1e-12);
    assert_eq!(sam(&x, &x).unwrap(), 0.0);
    assert!(sam(&x, &[0.0; 3]).is_err());
    let mut neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((sam(&x, &neg).unwrap() - 180.0).abs() < 1e-6);
    assert_eq!(sam_aligned(&x, &neg).unwrap(), 0.0);
    assert!(align_sign(&x, &mut neg));
    assert_eq!(neg, x);
}

#[test]
fn metrics_match_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let n = rng.random_range(2..40);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mut saa, mut sbb, mut sab, mut see) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            saa += a[i] * a[i];
            sbb += b[i] * b[i];
            sab += a[i] * b[i];
            see += (a[i] - b[i]) * (a[i] - b[i]);
        }
        let r = 10.0 * (saa / see).log10();
        let s = (sab / (saa * sbb).sqrt()).acos() * 180.0 / std::f64::consts::PI;
        assert!((rsnr(&a, &b).unwrap() - r).abs() <= 1e-12 * r.abs().max(1.0));
        assert!((sam(&a, &b).unwrap() - s).abs() <= 1e-12 * s.max(1.0));
    }
}

#[test]
fn mean_pixel_sam_averages_pixels() {
    // two pixels, two bands: pixel 0 identical, pixel 1 at 90°, pixel 2 zero
    let x = [1.0, 1.0, 0.0, 2.0, 0.0, 0.0];
    let y = [3.0, 0.0, 0.0, 6.0, 5.0, 0.0];
    assert!((mean_pixel_sam(&x, &y, 3).unwrap() - 45.0).abs() < 1e-12);
    assert!(mean_pixel_sam(&x, &y, 4).is_err());
    assert!(mean_pixel_sam(&[0.0; 4], &[0.0; 4], 2).is_err());
}

#[test]
fn metrics_csv_header() {
    let row = MetricsRecord {
        scene: "s".into(),
        method: "krism".into(),
        k: 4,
        l: 6,
        noise_db: 60.0,
        rsnr_db: 30.0,
        sam_deg: 2.0,
        exposures: 22,
        compression: 10.0,
    };
    let mut buf = Vec::new();
    write_metrics_csv(&[row], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "scene,method,k,L,noise_db,rsnr_db,sam_deg,exposures,compression"
    );
}

fn rank_one_cube() -> HsiCube {
    let (nx, ny, nl) = (48, 32, 40);
    let g = CubeGeometry::new(nx, ny, linear_grid(420.0, 459.0, nl)).unwrap();
    let spec = gaussian(nl, 20.0, 4.0);
    let mut img = vec![0.0; nx * ny];
    for y in 6..ny - 6 {
        for x in 14..nx - 14 {
            img[x + nx * y] = 0.5 + 0.5 * ((x as f64) * 0.5).sin() * ((y as f64) * 0.3).cos();
        }
    }
    let mut data = vec![0.0; nx * ny * nl];
    for j in 0..nl {
        for p in 0..nx * ny {
            data[p + nx * ny * j] = img[p] * spec[j];
        }
    }
    HsiCube::new(g, data).unwrap()
}

#[test]
fn identity_kernels_leave_factors() {
    let cube = rank_one_cube();
    let f = lanczos(&mut ExactCube(&cube), &KrylovConfig::new(1, 3)).unwrap();
    let out = deconv_factors(
        &f,
        &crate::optics::BlurKernels::identity(),
        &DeconvConfig::default(),
        &DeconvConfig::default(),
        Execution::Sequential,
    )
    .unwrap();
    assert!((out.u.clone() - &f.u).amax() < 1e-12);
    assert!((out.v.clone() - &f.v).amax() < 1e-12);
    assert_eq!(out.sigma, f.sigma);
}

#[test]
fn rank_one_round_trip_through_blur() {
    let cube = rank_one_cube();
    let p = OpticalParams {
        pixel_um: 500.0,
        ..OpticalParams::default()
    };
    // 30 µm bits are 1 nm bins on this grid
    let bits: Vec<u8> = msequence(3).unwrap();
    let code = ApertureCode::new(bits, 30.0, 6.4).unwrap();
    let kernels = make_kernels(&code, &p, cube.geometry()).unwrap();
    let blurred = Arc::new(blur_cube(&cube, &kernels).unwrap());
    let f = lanczos(&mut ExactCube(&blurred), &KrylovConfig::new(1, 3)).unwrap();
    let cfg = DeconvConfig {
        wiener_nsr: 1e-12,
        ..DeconvConfig::default()
    };
    for exec in [Execution::Sequential, Execution::Parallel] {
        let d = deconv_factors(&f, &kernels, &cfg, &cfg, exec).unwrap();
        let back = reconstruct(&d, 1).unwrap();
        let r = rsnr(cube.data(), back.data()).unwrap();
        assert!(r >= 40.0, "rsnr {r}");
    }
}

#[test]
fn method_routing() {
    let cfg = DeconvConfig::default().with_method(DeconvMethod::Tv);
    assert!(deconv_spectral(&[1.0, 2.0], &[1.0], &cfg).is_err());
    let cfg = DeconvConfig::default().with_method(DeconvMethod::L2Smooth);
    assert!(deconv_spatial(&[1.0; 4], 2, 2, &SpatialPsf::impulse(), &cfg).is_err());
    assert_eq!("l2_smooth".parse::<DeconvMethod>().unwrap(), DeconvMethod::L2Smooth);
    assert!("rl".parse::<DeconvMethod>().is_err());
}

