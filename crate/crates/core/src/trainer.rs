//! Pose assessment: detected joint angles against expert-defined targets
//! with adjustable tolerance, corrective feedback, and per-pose aggregates.
//!
//! Joints follow the standard 17-keypoint skeleton convention (nose, eyes,
//! ears, shoulders, elbows, wrists, hips, knees, ankles — left before
//! right). All angles are degrees in `[0, 360)`; joint comparisons use
//! circular distance so angles wrap.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const JOINT_COUNT: usize = 17;

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// Defaults are configurable, not normative: tolerance may be raised for
/// younger users.
pub const DEFAULT_TOLERANCE_DEG: f64 = 15.0;
pub const DEFAULT_HOLD_REQUIRED_S: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum TrainerError {
    #[error("expected {expected} joints, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no frames to assess")]
    EmptyFrames,

    #[error("invalid pose spec '{name}': {message}")]
    InvalidPoseSpec { name: String, message: String },

    #[error("pose file error: {0}")]
    PoseFile(String),
}

/// An expert-defined target pose.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoseSpec {
    pub name: String,
    pub target_angles: Vec<f64>,
    pub hold_required_s: f64,
}

impl PoseSpec {
    pub fn new(
        name: impl Into<String>,
        target_angles: Vec<f64>,
        hold_required_s: f64,
    ) -> Result<Self, TrainerError> {
        let name = name.into();
        if target_angles.len() != JOINT_COUNT {
            return Err(TrainerError::DimensionMismatch {
                expected: JOINT_COUNT,
                got: target_angles.len(),
            });
        }
        if let Some(bad) = target_angles.iter().find(|a| !(0.0..360.0).contains(*a)) {
            return Err(TrainerError::InvalidPoseSpec {
                name,
                message: format!("angle {bad} outside [0, 360)"),
            });
        }
        Ok(Self { name, target_angles, hold_required_s })
    }
}

/// One detected skeleton frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    pub timestamp_s: f64,
    pub detected_angles: Vec<f64>,
}

impl PoseFrame {
    pub fn new(timestamp_s: f64, detected_angles: Vec<f64>) -> Self {
        Self { timestamp_s, detected_angles }
    }
}

/// Assessment of one pose attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseOutcome {
    pub pose: String,
    pub complete: bool,
    pub hold_duration_s: f64,
    /// Per-joint mean error over all frames, degrees.
    pub avg_joint_error: Vec<f64>,
    /// Index of the joint with the largest average error (ties: lowest
    /// index).
    pub critical_joint: usize,
}

impl PoseOutcome {
    pub fn critical_joint_name(&self) -> &'static str {
        JOINT_NAMES[self.critical_joint]
    }

    /// Mean over joints of the per-joint average errors.
    pub fn mean_error_deg(&self) -> f64 {
        self.avg_joint_error.iter().sum::<f64>() / self.avg_joint_error.len() as f64
    }
}

/// Per-pose aggregate across attempts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaPerformanceRecord {
    pub pose: String,
    pub attempts: usize,
    pub avg_joint_error_deg: f64,
    pub critical_joint: String,
    pub hold_duration_s: f64,
    pub pose_complete: bool,
}

/// Circular angular distance in `[0, 180]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Signed shortest rotation from target to detected, in `(-180, 180]`.
/// Positive means the detected angle overshoots the target.
pub fn circular_delta(detected: f64, target: f64) -> f64 {
    let mut d = (detected - target).rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Per-joint circular error between a frame and the target pose.
pub fn frame_error(frame: &PoseFrame, spec: &PoseSpec) -> Result<Vec<f64>, TrainerError> {
    check_dims(frame, spec)?;
    Ok(frame
        .detected_angles
        .iter()
        .zip(&spec.target_angles)
        .map(|(d, t)| circular_distance(*d, *t))
        .collect())
}

/// Per-joint signed deltas, used to phrase directional feedback.
pub fn frame_delta(frame: &PoseFrame, spec: &PoseSpec) -> Result<Vec<f64>, TrainerError> {
    check_dims(frame, spec)?;
    Ok(frame
        .detected_angles
        .iter()
        .zip(&spec.target_angles)
        .map(|(d, t)| circular_delta(*d, *t))
        .collect())
}

fn check_dims(frame: &PoseFrame, spec: &PoseSpec) -> Result<(), TrainerError> {
    for len in [frame.detected_angles.len(), spec.target_angles.len()] {
        if len != JOINT_COUNT {
            return Err(TrainerError::DimensionMismatch { expected: JOINT_COUNT, got: len });
        }
    }
    Ok(())
}

/// Assess one attempt. A frame is in-pose iff every joint error is within
/// tolerance; the hold duration is the longest contiguous in-pose span
/// (first to last timestamp of the run); the attempt is complete iff that
/// span reaches the spec's required hold.
pub fn assess_pose(
    frames: &[PoseFrame],
    spec: &PoseSpec,
    tolerance_deg: f64,
) -> Result<PoseOutcome, TrainerError> {
    if frames.is_empty() {
        return Err(TrainerError::EmptyFrames);
    }

    let mut sums = vec![0.0_f64; JOINT_COUNT];
    let mut in_pose = Vec::with_capacity(frames.len());
    for frame in frames {
        let errors = frame_error(frame, spec)?;
        for (sum, e) in sums.iter_mut().zip(&errors) {
            *sum += e;
        }
        in_pose.push(errors.iter().all(|e| *e <= tolerance_deg));
    }
    let avg_joint_error: Vec<f64> =
        sums.into_iter().map(|s| s / frames.len() as f64).collect();

    let mut hold_duration_s = 0.0_f64;
    let mut run_start: Option<usize> = None;
    for (i, ok) in in_pose.iter().enumerate() {
        if *ok {
            let start = *run_start.get_or_insert(i);
            let span = frames[i].timestamp_s - frames[start].timestamp_s;
            hold_duration_s = hold_duration_s.max(span);
        } else {
            run_start = None;
        }
    }

    let critical_joint = argmax(&avg_joint_error);
    Ok(PoseOutcome {
        pose: spec.name.clone(),
        complete: hold_duration_s >= spec.hold_required_s,
        hold_duration_s,
        avg_joint_error,
        critical_joint,
    })
}

/// Largest value, ties resolved to the lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackEvent {
    pub verbal_hint: String,
    pub repeat_demo: bool,
}

/// Corrective feedback for an in-progress attempt from signed per-joint
/// deltas: if any joint exceeds tolerance, name the worst one (ties: lowest
/// index) with its direction and ask for a repeated demonstration;
/// otherwise encourage.
pub fn feedback_for(deltas: &[f64], tolerance_deg: f64) -> FeedbackEvent {
    let magnitudes: Vec<f64> = deltas.iter().map(|d| d.abs()).collect();
    let worst = argmax(&magnitudes);
    if magnitudes[worst] > tolerance_deg {
        let joint = JOINT_NAMES.get(worst).copied().unwrap_or("joint");
        let direction = if deltas[worst] > 0.0 { "bring it down" } else { "raise it" };
        FeedbackEvent {
            verbal_hint: format!(
                "your {joint} is about {:.0} degrees off, {direction} a little. \
                 watch me, i'll show the movement again.",
                magnitudes[worst]
            ),
            repeat_demo: true,
        }
    } else {
        FeedbackEvent {
            verbal_hint: "great form, keep holding just like that!".to_string(),
            repeat_demo: false,
        }
    }
}

/// One record per distinct pose name, in first-appearance order: attempt
/// count, mean of per-attempt mean errors, critical joint of the averaged
/// error profile, best hold duration, and whether any attempt completed.
pub fn aggregate_meta(outcomes: &[PoseOutcome]) -> Vec<MetaPerformanceRecord> {
    let mut order: Vec<&str> = Vec::new();
    for outcome in outcomes {
        if !order.contains(&outcome.pose.as_str()) {
            order.push(&outcome.pose);
        }
    }
    order
        .into_iter()
        .map(|pose| {
            let attempts: Vec<&PoseOutcome> =
                outcomes.iter().filter(|o| o.pose == pose).collect();
            let n = attempts.len() as f64;
            let mut joint_means = vec![0.0_f64; JOINT_COUNT];
            for attempt in &attempts {
                for (m, e) in joint_means.iter_mut().zip(&attempt.avg_joint_error) {
                    *m += e / n;
                }
            }
            MetaPerformanceRecord {
                pose: pose.to_string(),
                attempts: attempts.len(),
                avg_joint_error_deg: joint_means.iter().sum::<f64>() / JOINT_COUNT as f64,
                critical_joint: JOINT_NAMES[argmax(&joint_means)].to_string(),
                hold_duration_s: attempts
                    .iter()
                    .map(|a| a.hold_duration_s)
                    .fold(0.0, f64::max),
                pose_complete: attempts.iter().any(|a| a.complete),
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct PoseFile {
    #[serde(rename = "pose")]
    poses: Vec<PoseSpec>,
}

/// Load a pose roster from a TOML file of `[[pose]]` tables
/// (name, target_angles with 17 entries, hold_required_s).
pub fn load_poses(path: &std::path::Path) -> Result<Vec<PoseSpec>, TrainerError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TrainerError::PoseFile(format!("{}: {e}", path.display())))?;
    let file: PoseFile = toml::from_str(&text)
        .map_err(|e| TrainerError::PoseFile(format!("{}: {e}", path.display())))?;
    file.poses
        .into_iter()
        .map(|p| PoseSpec::new(p.name, p.target_angles, p.hold_required_s))
        .collect()
}

pub fn save_poses(poses: &[PoseSpec], path: &std::path::Path) -> Result<(), TrainerError> {
    let file = PoseFile { poses: poses.to_vec() };
    let text = toml::to_string_pretty(&file).map_err(|e| TrainerError::PoseFile(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| TrainerError::PoseFile(e.to_string()))
}

/// Built-in five-pose roster.
pub fn default_poses() -> Vec<PoseSpec> {
    let pose = |name: &str, angles: [f64; JOINT_COUNT]| {
        PoseSpec::new(name, angles.to_vec(), DEFAULT_HOLD_REQUIRED_S).expect("valid default pose")
    };
    vec![
        pose(
            "tree",
            [
                0.0, 5.0, 355.0, 10.0, 350.0, 170.0, 190.0, 160.0, 200.0, 150.0, 210.0, 180.0,
                180.0, 180.0, 45.0, 90.0, 90.0,
            ],
        ),
        pose(
            "warrior",
            [
                0.0, 5.0, 355.0, 10.0, 350.0, 90.0, 270.0, 180.0, 180.0, 180.0, 180.0, 170.0,
                190.0, 120.0, 180.0, 90.0, 100.0,
            ],
        ),
        pose(
            "cobra",
            [
                45.0, 50.0, 40.0, 55.0, 35.0, 130.0, 230.0, 150.0, 210.0, 170.0, 190.0, 175.0,
                185.0, 178.0, 182.0, 170.0, 190.0,
            ],
        ),
        pose(
            "chair",
            [
                10.0, 15.0, 5.0, 20.0, 0.0, 150.0, 210.0, 170.0, 190.0, 175.0, 185.0, 100.0,
                260.0, 100.0, 260.0, 80.0, 280.0,
            ],
        ),
        pose(
            "eagle",
            [
                0.0, 5.0, 355.0, 10.0, 350.0, 120.0, 240.0, 90.0, 270.0, 60.0, 300.0, 170.0,
                190.0, 150.0, 60.0, 85.0, 95.0,
            ],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent circular-distance oracle.
    fn circ_oracle(a: f64, b: f64) -> f64 {
        let diff = (a - b).abs() % 360.0;
        diff.min(360.0 - diff)
    }

    /// Brute-force longest contiguous in-pose span.
    fn longest_span_oracle(frames: &[PoseFrame], spec: &PoseSpec, tol: f64) -> f64 {
        let flags: Vec<bool> = frames
            .iter()
            .map(|f| frame_error(f, spec).unwrap().iter().all(|e| *e <= tol))
            .collect();
        let mut best = 0.0_f64;
        for i in 0..frames.len() {
            for j in i..frames.len() {
                if flags[i..=j].iter().all(|b| *b) {
                    best = best.max(frames[j].timestamp_s - frames[i].timestamp_s);
                }
            }
        }
        best
    }

    fn uniform_spec(angle: f64, hold: f64) -> PoseSpec {
        PoseSpec::new("test", vec![angle; JOINT_COUNT], hold).unwrap()
    }

    fn frame(t: f64, angles: Vec<f64>) -> PoseFrame {
        PoseFrame::new(t, angles)
    }

    #[test]
    fn identical_frame_has_zero_error() {
        let spec = uniform_spec(90.0, 5.0);
        let f = frame(0.0, vec![90.0; JOINT_COUNT]);
        assert_eq!(frame_error(&f, &spec).unwrap(), vec![0.0; JOINT_COUNT]);
    }

    #[test]
    fn wraparound_error_is_circular() {
        // oracle: min(|350-10|, 360-|350-10|) = 20
        assert_eq!(circ_oracle(350.0, 10.0), 20.0);
        let spec = uniform_spec(10.0, 5.0);
        let f = frame(0.0, vec![350.0; JOINT_COUNT]);
        let errors = frame_error(&f, &spec).unwrap();
        assert!(errors.iter().all(|e| (*e - 20.0).abs() < 1e-12));
    }

    #[test]
    fn sixteen_joint_frame_is_dimension_mismatch() {
        let spec = uniform_spec(10.0, 5.0);
        let f = frame(0.0, vec![0.0; 16]);
        assert_eq!(
            frame_error(&f, &spec),
            Err(TrainerError::DimensionMismatch { expected: 17, got: 16 })
        );
    }

    #[test]
    fn perfect_hold_completes_with_full_span() {
        let spec = uniform_spec(90.0, 5.0);
        let frames: Vec<PoseFrame> =
            (0..13).map(|i| frame(i as f64 * 0.5, vec![90.0; JOINT_COUNT])).collect();
        let outcome = assess_pose(&frames, &spec, DEFAULT_TOLERANCE_DEG).unwrap();
        assert!(outcome.complete);
        assert_eq!(outcome.hold_duration_s, 6.0);
        assert_eq!(outcome.hold_duration_s, longest_span_oracle(&frames, &spec, 15.0));
    }

    #[test]
    fn one_joint_over_tolerance_fails_and_is_critical() {
        let spec = uniform_spec(90.0, 5.0);
        let tol = DEFAULT_TOLERANCE_DEG;
        let frames: Vec<PoseFrame> = (0..13)
            .map(|i| {
                let mut angles = vec![90.0; JOINT_COUNT];
                angles[7] = 90.0 + tol + 1.0; // left_elbow persistently off
                frame(i as f64 * 0.5, angles)
            })
            .collect();
        let outcome = assess_pose(&frames, &spec, tol).unwrap();
        assert!(!outcome.complete);
        assert_eq!(outcome.critical_joint, 7);
        assert_eq!(outcome.critical_joint_name(), "left_elbow");
        // brute-force argmax agrees
        let brute = outcome
            .avg_joint_error
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
        assert_eq!(outcome.critical_joint, brute);
    }

    #[test]
    fn alternating_frames_never_accumulate_hold() {
        let spec = uniform_spec(90.0, 3.0);
        let frames: Vec<PoseFrame> = (0..8)
            .map(|i| {
                let angle = if i % 2 == 0 { 90.0 } else { 160.0 };
                frame(i as f64, vec![angle; JOINT_COUNT])
            })
            .collect();
        let outcome = assess_pose(&frames, &spec, 15.0).unwrap();
        assert!(!outcome.complete);
        assert_eq!(outcome.hold_duration_s, longest_span_oracle(&frames, &spec, 15.0));
        assert_eq!(outcome.hold_duration_s, 0.0);
    }

    #[test]
    fn empty_frames_error() {
        let spec = uniform_spec(90.0, 5.0);
        assert_eq!(assess_pose(&[], &spec, 15.0), Err(TrainerError::EmptyFrames));
    }

    #[test]
    fn feedback_within_tolerance_encourages() {
        let deltas = vec![1.0; JOINT_COUNT];
        let fb = feedback_for(&deltas, 15.0);
        assert!(!fb.repeat_demo);
    }

    #[test]
    fn feedback_names_worst_joint_and_repeats_demo() {
        let mut deltas = vec![2.0; JOINT_COUNT];
        deltas[7] = 40.0 + 15.0; // left_elbow worst, 40 over tolerance
        let fb = feedback_for(&deltas, 15.0);
        assert!(fb.repeat_demo);
        assert!(fb.verbal_hint.contains("left_elbow"), "hint: {}", fb.verbal_hint);
    }

    #[test]
    fn feedback_tie_names_lowest_index_joint() {
        let mut deltas = vec![0.0; JOINT_COUNT];
        deltas[3] = 30.0;
        deltas[9] = 30.0;
        let fb = feedback_for(&deltas, 15.0);
        assert!(fb.verbal_hint.contains(JOINT_NAMES[3]), "hint: {}", fb.verbal_hint);
    }

    #[test]
    fn aggregate_single_outcome_mirrors_it() {
        let spec = uniform_spec(90.0, 5.0);
        let frames = vec![frame(0.0, vec![90.0; JOINT_COUNT]), frame(6.0, vec![90.0; JOINT_COUNT])];
        let outcome = assess_pose(&frames, &spec, 15.0).unwrap();
        let meta = aggregate_meta(std::slice::from_ref(&outcome));
        assert_eq!(meta.len(), 1);
        assert_eq!(meta[0].pose, "test");
        assert_eq!(meta[0].attempts, 1);
        assert_eq!(meta[0].hold_duration_s, outcome.hold_duration_s);
        assert_eq!(meta[0].pose_complete, outcome.complete);
    }

    #[test]
    fn aggregate_averages_attempt_means() {
        let mk = |mean: f64, complete: bool| PoseOutcome {
            pose: "tree".into(),
            complete,
            hold_duration_s: if complete { 6.0 } else { 1.0 },
            avg_joint_error: vec![mean; JOINT_COUNT],
            critical_joint: 0,
        };
        // arithmetic-mean oracle: (10 + 20) / 2 = 15
        let meta = aggregate_meta(&[mk(10.0, false), mk(20.0, true)]);
        assert_eq!(meta.len(), 1);
        assert!((meta[0].avg_joint_error_deg - 15.0).abs() < 1e-12);
        assert!(meta[0].pose_complete, "any complete attempt marks the pose complete");
        assert_eq!(meta[0].hold_duration_s, 6.0);
        assert_eq!(meta[0].attempts, 2);
    }

    proptest! {
        /// Circular distance is symmetric, bounded by 180, and matches the
        /// independent oracle.
        #[test]
        fn circular_distance_properties(a in 0.0_f64..360.0, b in 0.0_f64..360.0) {
            let d = circular_distance(a, b);
            prop_assert!((0.0..=180.0).contains(&d));
            prop_assert!((d - circular_distance(b, a)).abs() < 1e-9);
            prop_assert!((d - circ_oracle(a, b)).abs() < 1e-9);
        }

        /// Raising the tolerance never flips an attempt from complete to
        /// incomplete.
        #[test]
        fn completion_is_monotone_in_tolerance(
            seed_angles in proptest::collection::vec(0.0_f64..360.0, JOINT_COUNT),
            offsets in proptest::collection::vec(-30.0_f64..30.0, JOINT_COUNT),
            t1 in 1.0_f64..40.0,
            extra in 0.1_f64..40.0,
        ) {
            let spec = PoseSpec::new("p", seed_angles.clone(), 2.0).unwrap();
            let frames: Vec<PoseFrame> = (0..6)
                .map(|i| {
                    let angles = seed_angles
                        .iter()
                        .zip(&offsets)
                        .map(|(a, o)| (a + o * (i % 3) as f64 / 2.0).rem_euclid(360.0))
                        .collect();
                    PoseFrame::new(i as f64, angles)
                })
                .collect();
            let low = assess_pose(&frames, &spec, t1).unwrap();
            let high = assess_pose(&frames, &spec, t1 + extra).unwrap();
            prop_assert!(!low.complete || high.complete);
            prop_assert!(high.hold_duration_s >= low.hold_duration_s);
        }

        /// The critical joint always equals the brute-force argmax of the
        /// averaged error vector.
        #[test]
        fn critical_joint_matches_brute_force(
            angles in proptest::collection::vec(0.0_f64..360.0, JOINT_COUNT * 3),
        ) {
            let spec = uniform_spec(90.0, 5.0);
            let frames: Vec<PoseFrame> = angles
                .chunks(JOINT_COUNT)
                .enumerate()
                .map(|(i, chunk)| PoseFrame::new(i as f64, chunk.to_vec()))
                .collect();
            let outcome = assess_pose(&frames, &spec, 15.0).unwrap();
            let mut best = 0;
            for (i, e) in outcome.avg_joint_error.iter().enumerate() {
                if *e > outcome.avg_joint_error[best] {
                    best = i;
                }
            }
            prop_assert_eq!(outcome.critical_joint, best);
        }
    }

    #[test]
    fn default_poses_are_valid_and_distinct() {
        let poses = default_poses();
        assert_eq!(poses.len(), 5);
        let names: std::collections::BTreeSet<&str> =
            poses.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names.len(), 5);
    }

    #[test]
    fn pose_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poses.toml");
        save_poses(&default_poses(), &path).unwrap();
        let loaded = load_poses(&path).unwrap();
        assert_eq!(loaded.len(), 5);
        assert_eq!(loaded[0].name, "tree");
        assert_eq!(loaded[0].target_angles.len(), JOINT_COUNT);
    }
}
