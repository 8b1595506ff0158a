use nalgebra::{Matrix3, Vector3};

use super::fault::{chipping_weights, ChipWeights, FaultState};
use super::params::VehicleParams;
use crate::real::Real;

/// Principal inertia of a propeller about its hub, in the blade frame (x along blade 1).
///
/// Each blade is a thin plate of chord `width` with mass proportional to its length, so the
/// propeller carries `prop_mass / (2 radius)` kilograms per metre of blade.
pub fn blade_inertia<T: Real>(r1: T, r2: T, width: T, prop_mass: T, radius: T) -> Vector3<T> {
    let density = prop_mass / (T::lit(2.0) * radius);
    let mass = density * (r1 + r2);
    let ixx = mass * width * width / T::lit(12.0);
    let iyy = density * (r1.powi(3) + r2.powi(3)) / T::lit(3.0);
    Vector3::new(ixx, iyy, ixx + iyy)
}

/// Blade inertia rotated into the body frame by the blade angle.
pub fn rotated_blade_inertia<T: Real>(principal: &Vector3<T>, angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    let (ixx, iyy) = (principal.x, principal.y);
    let off = (ixx - iyy) * c * s;
    Matrix3::new(
        ixx * c * c + iyy * s * s,
        off,
        T::zero(),
        off,
        ixx * s * s + iyy * c * c,
        T::zero(),
        T::zero(),
        T::zero(),
        principal.z,
    )
}

/// Blade direction `p_i = (cos theta, sin theta, 0)`.
#[inline]
pub fn blade_direction<T: Real>(angle: T) -> Vector3<T> {
    let (s, c) = angle.sin_cos();
    Vector3::new(c, s, T::zero())
}

/// Mass, centre of mass and inertia of the whole vehicle at one set of blade angles.
#[derive(Debug, Clone, PartialEq)]
pub struct MassProperties<T: Real> {
    pub mass: T,
    /// Centre of mass in the body frame (m), `static_com + rotating_com`.
    pub com: Vector3<T>,
    /// Arm contribution `(1/m) sum m_i l_i`.
    pub static_com: Vector3<T>,
    /// Unbalance contribution `(1/m) sum m_i k_i p_i`.
    pub rotating_com: Vector3<T>,
    pub inertia: Matrix3<T>,
}

/// Fault-dependent constants of the vehicle, precomputed once per fault state.
#[derive(Debug, Clone, PartialEq)]
pub struct Airframe<T: Real> {
    pub params: VehicleParams<T>,
    pub weights: Vec<ChipWeights<T>>,
    /// `m_i = w_i * prop_mass`.
    pub prop_masses: Vec<T>,
    /// Principal hub inertia of every propeller.
    pub blade_inertias: Vec<Vector3<T>>,
    pub mass: T,
    /// `sum m_i l_i`.
    pub arm_moment: Vector3<T>,
}

impl<T: Real> Airframe<T> {
    pub fn new(params: &VehicleParams<T>, fault: &FaultState<T>) -> Self {
        let weights = chipping_weights(fault, params);
        let prop_masses: Vec<T> = weights.iter().map(|w| w.mass * params.prop_mass).collect();
        let blade_inertias = fault
            .radii
            .iter()
            .map(|[r1, r2]| blade_inertia(*r1, *r2, params.blade_width, params.prop_mass, params.blade_radius))
            .collect();
        let mass = prop_masses.iter().fold(params.frame_mass, |acc, m| acc + *m);
        let arm_moment = params
            .arms
            .iter()
            .zip(&prop_masses)
            .fold(Vector3::zeros(), |acc, (l, m)| acc + l * *m);
        Self {
            params: params.clone(),
            weights,
            prop_masses,
            blade_inertias,
            mass,
            arm_moment,
        }
    }

    pub fn healthy(params: &VehicleParams<T>) -> Self {
        Self::new(params, &FaultState::healthy(params))
    }

    pub fn rotor_count(&self) -> usize {
        self.prop_masses.len()
    }

    /// `sum m_i k_i p_i` at the given blade angles.
    pub fn unbalance_moment(&self, angles: &[T]) -> Vector3<T> {
        let mut acc = Vector3::zeros();
        for ((m, w), angle) in self.prop_masses.iter().zip(&self.weights).zip(angles) {
            if w.offset != T::zero() {
                acc += blade_direction(*angle) * (*m * w.offset);
            }
        }
        acc
    }

    /// Total inertia `I0 + sum R_i I_i R_i^T`.
    pub fn inertia(&self, angles: &[T]) -> Matrix3<T> {
        self.blade_inertias
            .iter()
            .zip(angles)
            .fold(self.params.frame_inertia, |acc, (principal, angle)| {
                acc + rotated_blade_inertia(principal, *angle)
            })
    }

    pub fn mass_properties(&self, angles: &[T]) -> MassProperties<T> {
        let static_com = self.arm_moment / self.mass;
        let rotating_com = self.unbalance_moment(angles) / self.mass;
        MassProperties {
            mass: self.mass,
            com: static_com + rotating_com,
            static_com,
            rotating_com,
            inertia: self.inertia(angles),
        }
    }
}

/// Mass, centre of mass and inertia for a fault state and blade angles.
pub fn mass_properties<T: Real>(fault: &FaultState<T>, params: &VehicleParams<T>, angles: &[T]) -> MassProperties<T> {
    Airframe::new(params, fault).mass_properties(angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Point-mass discretisation of the two plates: 100 cells along the span, 100 across the chord.
    fn discretized_inertia(r1: f64, r2: f64, width: f64, prop_mass: f64, radius: f64) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let areal = prop_mass / (2.0 * radius * width);
        let (nx, ny) = (100usize, 100usize);
        let span = r1 + r2;
        let (dx, dy) = (span / nx as f64, width / ny as f64);
        let mut mass = 0.0;
        let mut first = Vector3::zeros();
        let mut inertia = Matrix3::zeros();
        for i in 0..nx {
            let x = -r2 + (i as f64 + 0.5) * dx;
            for j in 0..ny {
                let y = -width / 2.0 + (j as f64 + 0.5) * dy;
                let dm = areal * dx * dy;
                let pos = Vector3::new(x, y, 0.0);
                mass += dm;
                first += pos * dm;
                inertia += (Matrix3::identity() * pos.norm_squared() - pos * pos.transpose()) * dm;
            }
        }
        (mass, first / mass, inertia)
    }

    #[test]
    fn blade_inertia_matches_discrete_oracle() {
        let (r, a, m) = (0.12, 0.025, 0.13);
        for (r1, r2) in [(r, r), (0.9 * r, r), (0.8 * r, 0.95 * r), (0.5 * r, r)] {
            let analytic = blade_inertia(r1, r2, a, m, r);
            let (mass, com, oracle) = discretized_inertia(r1, r2, a, m, r);
            let w = ChipWeights::from_radii(r1, r2, r);
            assert_relative_eq!(mass, w.mass * m, max_relative = 1e-12);
            assert_relative_eq!(com.x, w.offset, epsilon = 1e-12);
            // midpoint rule error is O(1/n^2)
            assert_relative_eq!(analytic.x, oracle[(0, 0)], max_relative = 1e-3);
            assert_relative_eq!(analytic.y, oracle[(1, 1)], max_relative = 1e-3);
            assert_relative_eq!(analytic.z, oracle[(2, 2)], max_relative = 1e-3);
            assert!(oracle[(0, 1)].abs() < 1e-12);
        }
    }

    #[test]
    fn rotated_inertia_is_similarity_transform() {
        let principal = Vector3::new(1.0, 3.0, 4.0);
        let angle = 0.7f64;
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        let expected = rot.matrix() * Matrix3::from_diagonal(&principal) * rot.matrix().transpose();
        assert_relative_eq!(rotated_blade_inertia(&principal, angle), expected, epsilon = 1e-14);
    }

    #[test]
    fn healthy_mass_and_centre() {
        let p = VehicleParams::<f64>::default();
        let props = mass_properties(&FaultState::healthy(&p), &p, &[0.3; 8]);
        assert_relative_eq!(props.mass, 2.59, epsilon = 1e-12);
        assert!(props.static_com.norm() < 1e-15);
        assert!(props.rotating_com.norm() < 1e-15);
    }

    #[test]
    fn chipped_rotor_shifts_rotating_com() {
        let p = VehicleParams::<f64>::default();
        let fault = FaultState::chipped(&p, 1, 0.1, 0.0);
        let props = mass_properties(&fault, &p, &[1.1; 8]);
        let m2 = 0.95 * 0.13;
        let m = 1.55 + 7.0 * 0.13 + m2;
        assert_relative_eq!(props.mass, m, epsilon = 1e-12);
        assert_relative_eq!(props.rotating_com.norm(), m2 * 0.006 / m, max_relative = 1e-12);
        assert!((props.rotating_com.norm() - 2.868e-4).abs() < 1e-6);

        // brute force: frame at origin, hub point masses on the arms, discretised blades
        let (rod_mass, rod_com, _) = discretized_inertia(0.9 * 0.12, 0.12, 0.025, 0.13, 0.12);
        let mut first = Vector3::zeros();
        for (i, arm) in p.arms.iter().enumerate() {
            let mi = if i == 1 { rod_mass } else { 0.13 };
            let offset = if i == 1 { blade_direction(1.1) * rod_com.x } else { Vector3::zeros() };
            first += (arm + offset) * mi;
        }
        assert_relative_eq!(props.com, first / m, epsilon = 1e-12);
    }
}
