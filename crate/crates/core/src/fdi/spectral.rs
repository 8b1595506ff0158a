use nalgebra::Vector3;
use num_complex::Complex;

use super::goertzel::goertzel;
use crate::model::{xi_a, Airframe};
use crate::real::Real;

fn dft3<T: Real>(trace: &[Vector3<T>], pulsation: T, sample_rate: T, scratch: &mut Vec<T>) -> [Complex<T>; 3] {
    let mut out = [Complex::new(T::zero(), T::zero()); 3];
    for (k, o) in out.iter_mut().enumerate() {
        scratch.clear();
        scratch.extend(trace.iter().map(|v| v[k]));
        *o = goertzel(scratch, pulsation, sample_rate);
    }
    out
}

/// Spectrum of `f_as` predicted from an angular velocity trace alone:
/// `sum_i m_i (<e1, l_i> S_1 + <e2, l_i> S_2)` with `S_k = F[w x (w x e_k)] - j nu (e_k x F[w])`.
///
/// Returns the DFT sum `sum_n x[n] e^{-j nu n dt}` of each component at each pulsation, the
/// same scaling as [`goertzel`](super::goertzel) applied to a sampled `f_as` trace.
pub fn spectral_predictor_fas<T: Real>(
    airframe: &Airframe<T>,
    omega: &[Vector3<T>],
    sample_rate: T,
    pulsations: &[T],
) -> Vec<[Complex<T>; 3]> {
    let moment = airframe.arm_moment;
    let zero = Complex::new(T::zero(), T::zero());
    if moment.x == T::zero() && moment.y == T::zero() {
        return vec![[zero; 3]; pulsations.len()];
    }
    let v: [Vec<Vector3<T>>; 2] = [Vector3::x(), Vector3::y()].map(|e| omega.iter().map(|w| w.cross(&w.cross(&e))).collect());
    let mut scratch = Vec::with_capacity(omega.len());
    pulsations
        .iter()
        .map(|nu| {
            let big_omega = dft3(omega, *nu, sample_rate, &mut scratch);
            let mut acc = [zero; 3];
            for (k, coeff) in [moment.x, moment.y].into_iter().enumerate() {
                let vk = dft3(&v[k], *nu, sample_rate, &mut scratch);
                // e_k x W for e_1 = (1,0,0): (0, -W_z, W_y); for e_2 = (0,1,0): (W_z, 0, -W_x)
                let cross = if k == 0 {
                    [zero, -big_omega[2], big_omega[1]]
                } else {
                    [big_omega[2], zero, -big_omega[0]]
                };
                for c in 0..3 {
                    let s = vk[c] - cross[c] * Complex::new(T::zero(), *nu);
                    acc[c] += s * coeff;
                }
            }
            acc
        })
        .collect()
}

/// Carriers `gamma_i1 = m_i k_i Xi_a e1` and `gamma_i2 = m_i k_i Xi_a e2` of every rotor, so
/// that `f_aa = sum_i gamma_i1 cos th_i + gamma_i2 sin th_i`.
pub fn unbalance_carriers<T: Real>(
    airframe: &Airframe<T>,
    omega: &Vector3<T>,
    omega_dot: &Vector3<T>,
    speeds: &[T],
    accels: &[T],
) -> Vec<(Vector3<T>, Vector3<T>)> {
    (0..airframe.rotor_count())
        .map(|i| {
            let mk = airframe.prop_masses[i] * airframe.weights[i].offset;
            let xi = xi_a(omega, omega_dot, speeds[i], accels[i]) * mk;
            (xi.column(0).into_owned(), xi.column(1).into_owned())
        })
        .collect()
}

/// DFT of the amplitude-modulated signal `gamma_1 cos th + gamma_2 sin th` built from
/// carrier and blade-angle traces.
pub fn modulation_spectrum<T: Real>(
    carriers: &[(Vector3<T>, Vector3<T>)],
    angles: &[T],
    sample_rate: T,
    pulsations: &[T],
) -> Vec<[Complex<T>; 3]> {
    let signal: Vec<Vector3<T>> = carriers
        .iter()
        .zip(angles)
        .map(|((g1, g2), th)| g1 * th.cos() + g2 * th.sin())
        .collect();
    let mut scratch = Vec::with_capacity(signal.len());
    pulsations
        .iter()
        .map(|nu| dft3(&signal, *nu, sample_rate, &mut scratch))
        .collect()
}
