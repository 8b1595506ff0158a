use nalgebra::{Matrix3, Vector3};

use crate::real::Real;

/// Rigid-body state of the central body plus angle and speed of every rotor.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T: Real> {
    /// Position of the body frame in the NED earth frame (m).
    pub position: Vector3<T>,
    /// Rotation body to earth.
    pub attitude: Matrix3<T>,
    /// Body-frame linear velocity (m/s).
    pub velocity: Vector3<T>,
    /// Body-frame angular velocity (rad/s).
    pub angular_velocity: Vector3<T>,
    /// Blade angles (rad).
    pub blade_angles: Vec<T>,
    /// Signed rotor speeds (rad/s).
    pub rotor_speeds: Vec<T>,
}

/// Time derivative of every [`SimState`] field.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative<T: Real> {
    pub position: Vector3<T>,
    pub attitude: Matrix3<T>,
    pub velocity: Vector3<T>,
    pub angular_velocity: Vector3<T>,
    pub blade_angles: Vec<T>,
    pub rotor_speeds: Vec<T>,
}

impl<T: Real> SimState<T> {
    /// Level vehicle at rest at `position` with every rotor stopped at zero angle.
    pub fn at_rest(position: Vector3<T>, rotors: usize) -> Self {
        Self {
            position,
            attitude: Matrix3::identity(),
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            blade_angles: vec![T::zero(); rotors],
            rotor_speeds: vec![T::zero(); rotors],
        }
    }

    /// `self + h * d`, without re-orthonormalising the attitude.
    pub fn advanced(&self, d: &StateDerivative<T>, h: T) -> Self {
        Self {
            position: self.position + d.position * h,
            attitude: self.attitude + d.attitude * h,
            velocity: self.velocity + d.velocity * h,
            angular_velocity: self.angular_velocity + d.angular_velocity * h,
            blade_angles: axpy(&self.blade_angles, &d.blade_angles, h),
            rotor_speeds: axpy(&self.rotor_speeds, &d.rotor_speeds, h),
        }
    }

    /// Projects the attitude back onto SO(3) with Newton iterations of the polar decomposition.
    pub fn reorthonormalize(&mut self) {
        let half = T::lit(0.5);
        for _ in 0..3 {
            let r = self.attitude;
            let inv_t = match r.try_inverse() {
                Some(inv) => inv.transpose(),
                None => return,
            };
            self.attitude = (r + inv_t) * half;
        }
    }

    /// Largest deviation of `R^T R` from the identity.
    pub fn orthonormality_error(&self) -> T {
        (self.attitude.transpose() * self.attitude - Matrix3::identity()).amax()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.attitude.iter()).chain(self.velocity.iter())
            .chain(self.angular_velocity.iter())
            .chain(self.blade_angles.iter())
            .chain(self.rotor_speeds.iter())
            .all(|x| x.is_finite_value())
    }

    /// Linear momentum in the earth frame for a body of mass `mass` whose centre of mass is at
    /// `com` in the body frame.
    pub fn linear_momentum(&self, mass: T, com: &Vector3<T>) -> Vector3<T> {
        self.attitude * (self.velocity + self.angular_velocity.cross(com)) * mass
    }

    /// Angular momentum about the centre of mass, earth frame.
    pub fn angular_momentum(&self, inertia: &Matrix3<T>) -> Vector3<T> {
        self.attitude * (inertia * self.angular_velocity)
    }
}

impl<T: Real> StateDerivative<T> {
    /// Weighted RK4 combination `(k1 + 2 k2 + 2 k3 + k4) / 6`.
    pub fn rk4_blend(k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self {
        let two = T::lit(2.0);
        let sixth = T::one() / T::lit(6.0);
        let blend3 = |a: Vector3<T>, b: Vector3<T>, c: Vector3<T>, d: Vector3<T>| (a + (b + c) * two + d) * sixth;
        let blend_vec = |a: &[T], b: &[T], c: &[T], d: &[T]| -> Vec<T> {
            a.iter()
                .zip(b)
                .zip(c)
                .zip(d)
                .map(|(((a, b), c), d)| (*a + (*b + *c) * two + *d) * sixth)
                .collect()
        };
        Self {
            position: blend3(k1.position, k2.position, k3.position, k4.position),
            attitude: (k1.attitude + (k2.attitude + k3.attitude) * two + k4.attitude) * sixth,
            velocity: blend3(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
            angular_velocity: blend3(
                k1.angular_velocity,
                k2.angular_velocity,
                k3.angular_velocity,
                k4.angular_velocity,
            ),
            blade_angles: blend_vec(&k1.blade_angles, &k2.blade_angles, &k3.blade_angles, &k4.blade_angles),
            rotor_speeds: blend_vec(&k1.rotor_speeds, &k2.rotor_speeds, &k3.rotor_speeds, &k4.rotor_speeds),
        }
    }
}

fn axpy<T: Real>(x: &[T], d: &[T], h: T) -> Vec<T> {
    x.iter().zip(d).map(|(x, d)| *x + *d * h).collect()
}

/// ZYX Euler angles `(roll, pitch, yaw)` of a body-to-earth rotation. Pitch is clamped away
/// from +-pi/2 by 1e-6 rad.
pub fn euler_zyx<T: Real>(r: &Matrix3<T>) -> Vector3<T> {
    let limit = T::frac_pi_2() - T::lit(1e-6);
    let sin_pitch = (-r[(2, 0)]).max(-T::one()).min(T::one());
    let pitch = sin_pitch.asin().max(-limit).min(limit);
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    Vector3::new(roll, pitch, yaw)
}

/// Rotation body to earth from ZYX Euler angles `(roll, pitch, yaw)`.
pub fn rotation_from_euler<T: Real>(euler: &Vector3<T>) -> Matrix3<T> {
    let (sr, cr) = euler.x.sin_cos();
    let (sp, cp) = euler.y.sin_cos();
    let (sy, cy) = euler.z.sin_cos();
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}
