use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference families. Positions are NED offsets from `Trajectory::origin` (up is `-z`).
/// Omitted parameters take the family defaults of the constructors below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectoryKind {
    Hover {},
    /// Constant velocity along `direction`.
    Line {
        #[serde(default = "d::line_direction")]
        direction: [f64; 3],
        #[serde(default = "d::speed")]
        speed: f64,
    },
    /// `(R cos wt, R sin wt, -c t)`.
    Helicoid {
        #[serde(default = "d::helicoid_radius")]
        radius: f64,
        #[serde(default = "d::helicoid_pulsation")]
        pulsation: f64,
        #[serde(default = "d::helicoid_climb")]
        climb_rate: f64,
    },
    /// `(A sin wt, B sin 2wt, -c t)`.
    Figure8 {
        #[serde(default = "d::figure8_x")]
        amplitude_x: f64,
        #[serde(default = "d::figure8_y")]
        amplitude_y: f64,
        #[serde(default = "d::figure8_pulsation")]
        pulsation: f64,
        #[serde(default = "d::figure8_climb")]
        climb_rate: f64,
    },
    /// Square of side `side` flown at `speed`, corners blended over `blend_time` seconds.
    Square {
        #[serde(default = "d::square_side")]
        side: f64,
        #[serde(default = "d::speed")]
        speed: f64,
        #[serde(default = "d::square_blend")]
        blend_time: f64,
    },
}

mod d {
    pub fn line_direction() -> [f64; 3] {
        [1.0, 0.5, -0.2]
    }
    pub fn speed() -> f64 {
        0.5
    }
    pub fn helicoid_radius() -> f64 {
        2.0
    }
    pub fn helicoid_pulsation() -> f64 {
        0.3
    }
    pub fn helicoid_climb() -> f64 {
        0.2
    }
    pub fn figure8_x() -> f64 {
        2.0
    }
    pub fn figure8_y() -> f64 {
        1.0
    }
    pub fn figure8_pulsation() -> f64 {
        0.25
    }
    pub fn figure8_climb() -> f64 {
        0.1
    }
    pub fn square_side() -> f64 {
        4.0
    }
    pub fn square_blend() -> f64 {
        2.0
    }
}

/// Unknown keys are rejected by the flattened [`TrajectoryKind`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    #[serde(flatten)]
    pub kind: TrajectoryKind,
    #[serde(default)]
    pub origin: [f64; 3],
    /// Constant yaw rate (rad/s).
    #[serde(default)]
    pub yaw_rate: f64,
}

/// Position, velocity and acceleration reference in the earth frame, plus yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub accel: Vector3<f64>,
    pub yaw: f64,
    pub yaw_rate: f64,
}

impl Trajectory {
    pub fn new(kind: TrajectoryKind) -> Self {
        Self {
            kind,
            origin: [0.0; 3],
            yaw_rate: 0.0,
        }
    }

    pub fn hover() -> Self {
        Self::new(TrajectoryKind::Hover {})
    }

    pub fn line() -> Self {
        Self::new(TrajectoryKind::Line {
            direction: d::line_direction(),
            speed: d::speed(),
        })
    }

    pub fn helicoid() -> Self {
        Self::new(TrajectoryKind::Helicoid {
            radius: d::helicoid_radius(),
            pulsation: d::helicoid_pulsation(),
            climb_rate: d::helicoid_climb(),
        })
    }

    pub fn figure8() -> Self {
        Self::new(TrajectoryKind::Figure8 {
            amplitude_x: d::figure8_x(),
            amplitude_y: d::figure8_y(),
            pulsation: d::figure8_pulsation(),
            climb_rate: d::figure8_climb(),
        })
    }

    pub fn square() -> Self {
        Self::new(TrajectoryKind::Square {
            side: d::square_side(),
            speed: d::speed(),
            blend_time: d::square_blend(),
        })
    }

    /// Short name used in record keys and reports.
    pub fn name(&self) -> &'static str {
        match self.kind {
            TrajectoryKind::Hover {} => "hover",
            TrajectoryKind::Line { .. } => "line",
            TrajectoryKind::Helicoid { .. } => "helicoid",
            TrajectoryKind::Figure8 { .. } => "figure8",
            TrajectoryKind::Square { .. } => "square",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(format!("{} trajectory: {m}", self.name())));
        match &self.kind {
            TrajectoryKind::Hover {} => {}
            TrajectoryKind::Line { direction, speed } => {
                if Vector3::from(*direction).norm() == 0.0 {
                    return bad("zero direction");
                }
                if !(*speed >= 0.0) {
                    return bad("negative speed");
                }
            }
            TrajectoryKind::Helicoid { radius, pulsation, .. } => {
                if !(*radius >= 0.0 && pulsation.is_finite()) {
                    return bad("radius must be >= 0");
                }
            }
            TrajectoryKind::Figure8 { pulsation, .. } => {
                if !pulsation.is_finite() {
                    return bad("non-finite pulsation");
                }
            }
            TrajectoryKind::Square { side, speed, blend_time } => {
                if !(*side > 0.0 && *speed > 0.0 && *blend_time >= 0.0) {
                    return bad("side and speed must be positive");
                }
                if *blend_time > side / speed {
                    return bad("blend time longer than a side");
                }
            }
        }
        Ok(())
    }

    pub fn reference(&self, t: f64) -> Reference {
        let (p, v, a) = match &self.kind {
            TrajectoryKind::Hover {} => (Vector3::zeros(), Vector3::zeros(), Vector3::zeros()),
            TrajectoryKind::Line { direction, speed } => {
                let d = Vector3::from(*direction).normalize() * *speed;
                (d * t, d, Vector3::zeros())
            }
            TrajectoryKind::Helicoid {
                radius: r,
                pulsation: w,
                climb_rate: c,
            } => {
                let (s, co) = (w * t).sin_cos();
                (
                    Vector3::new(r * co, r * s, -c * t),
                    Vector3::new(-r * w * s, r * w * co, -c),
                    Vector3::new(-r * w * w * co, -r * w * w * s, 0.0),
                )
            }
            TrajectoryKind::Figure8 {
                amplitude_x: ax,
                amplitude_y: ay,
                pulsation: w,
                climb_rate: c,
            } => {
                let (s1, c1) = (w * t).sin_cos();
                let (s2, c2) = (2.0 * w * t).sin_cos();
                (
                    Vector3::new(ax * s1, ay * s2, -c * t),
                    Vector3::new(ax * w * c1, 2.0 * ay * w * c2, -c),
                    Vector3::new(-ax * w * w * s1, -4.0 * ay * w * w * s2, 0.0),
                )
            }
            TrajectoryKind::Square { side, speed, blend_time } => square(*side, *speed, *blend_time, t),
        };
        Reference {
            position: p + Vector3::from(self.origin),
            velocity: v,
            accel: a,
            yaw: self.yaw_rate * t,
            yaw_rate: self.yaw_rate,
        }
    }
}

fn smoothstep(x: f64) -> (f64, f64, f64) {
    // value, first derivative, integral from 0
    let x2 = x * x;
    let s = x2 * x * (10.0 - 15.0 * x + 6.0 * x2);
    let ds = 30.0 * x2 * (1.0 - x) * (1.0 - x);
    let is = x2 * x2 * (2.5 - 3.0 * x + x2);
    (s, ds, is)
}

/// Square starting mid-way along its first side, heading north. Corner `j` is reached at
/// `(j + 1/2) side / speed`; around each corner the velocity direction is blended with a
/// quintic smoothstep, which keeps the acceleration continuous.
fn square(side: f64, speed: f64, blend: f64, t: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let dir = |k: usize| {
        let a = -((k % 4) as f64) * PI / 2.0;
        Vector3::new(a.cos(), a.sin(), 0.0)
    };
    let leg = side / speed;
    let lap = 4.0 * leg;
    let tl = t - (t / lap).floor() * lap;

    // unblended polygon: corners passed so far and the straight-line position
    let passed = (((tl / leg) + 0.5).floor() as usize).min(4);
    let mut vertex = -dir(0) * (side / 2.0);
    let mut t_vertex = -leg / 2.0;
    for j in 0..passed {
        vertex += dir(j) * side;
        t_vertex += leg;
    }
    let mut p = vertex + dir(passed) * (speed * (tl - t_vertex));
    let mut v = dir(passed) * speed;
    let mut a = Vector3::zeros();

    if blend > 0.0 {
        // nearest corner, possibly the one just ahead
        let j = ((tl / leg).floor() as usize).min(3);
        let tc = (j as f64 + 0.5) * leg;
        let x = (tl - tc) / blend + 0.5;
        if (0.0..1.0).contains(&x) {
            let (s, ds, is) = smoothstep(x);
            let delta = dir(j + 1) - dir(j);
            v = (dir(j) + delta * s) * speed;
            a = delta * (ds * speed / blend);
            p = if x <= 0.5 {
                // straight-line position is still on leg j
                p + delta * (speed * blend * is)
            } else {
                p + delta * (speed * blend * (is - (x - 0.5)))
            };
        }
    }
    (p, v, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all() -> Vec<Trajectory> {
        vec![Trajectory::line(), Trajectory::helicoid(), Trajectory::figure8(), Trajectory::square()]
    }

    #[test]
    fn line_starts_at_origin_with_constant_velocity() {
        let tr = Trajectory::line();
        let r0 = tr.reference(0.0);
        assert_eq!(r0.position, Vector3::zeros());
        assert_relative_eq!(r0.velocity.norm(), 0.5, epsilon = 1e-15);
        assert_eq!(tr.reference(7.0).velocity, r0.velocity);
    }

    #[test]
    fn helicoid_definition() {
        let tr = Trajectory::helicoid();
        let t = 3.7;
        let r = tr.reference(t);
        assert_relative_eq!(r.position, Vector3::new(2.0 * (0.3 * t).cos(), 2.0 * (0.3 * t).sin(), -0.2 * t), epsilon = 1e-14);
    }

    /// Velocity and acceleration agree with central differences of position, and the
    /// acceleration is continuous, for every family.
    #[test]
    fn references_are_c2() {
        let h = 1e-4;
        for tr in all() {
            let mut prev_a: Option<Vector3<f64>> = None;
            for k in 0..6000 {
                let t = k as f64 * 0.01;
                let (m, r, p) = (tr.reference(t - h), tr.reference(t), tr.reference(t + h));
                let v = (p.position - m.position) / (2.0 * h);
                let a = (p.velocity - m.velocity) / (2.0 * h);
                assert!((v - r.velocity).norm() < 1e-6, "{} velocity at {t}", tr.name());
                assert!((a - r.accel).norm() < 1e-4, "{} accel at {t}", tr.name());
                if let Some(pa) = prev_a {
                    assert!((r.accel - pa).norm() < 0.02, "{} accel jump at {t}", tr.name());
                }
                prev_a = Some(r.accel);
            }
        }
    }

    #[test]
    fn square_closes_after_a_lap() {
        let tr = Trajectory::square();
        let lap = 4.0 * 4.0 / 0.5;
        let (a, b) = (tr.reference(1.3), tr.reference(1.3 + lap));
        assert_relative_eq!(a.position, b.position, epsilon = 1e-9);
        assert_relative_eq!(a.velocity, b.velocity, epsilon = 1e-12);
        // corners pass inside the square, at most side/2 from its centre line
        for k in 0..3200 {
            let p = tr.reference(k as f64 * 0.01).position;
            assert!(p.x.abs() <= 2.0 + 1e-9 && p.y <= 1e-9 && p.y >= -4.0 - 1e-9, "{p}");
        }
    }

    #[test]
    fn the_defaults_validate() {
        for tr in all() {
            tr.validate().unwrap();
        }
        assert!(Trajectory::new(TrajectoryKind::Square {
            side: 1.0,
            speed: 1.0,
            blend_time: 2.0
        })
        .validate()
        .is_err());
    }
}
