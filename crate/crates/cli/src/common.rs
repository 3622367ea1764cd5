//! Shared harness plumbing: canonical scenes, error-to-exit-code mapping,
//! provenance comments, and config hashing.

use std::fmt;

use depthgeom::rng::mix64;
use depthgeom::{gen_hemisphere, gen_plane, gen_step, gen_wedge, Intrinsics, Scene, Vec3};

use crate::SceneKind;

/// Harness error carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flag combination or value (exit 2).
    BadArgs(String),
    /// File system or parse failure (exit 3).
    Io(String),
    /// Numerical failure (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::BadArgs(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn bad_args(msg: impl Into<String>) -> Self {
        CliError::BadArgs(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::BadArgs(m) => write!(f, "bad arguments: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl From<depthgeom::Error> for CliError {
    fn from(e: depthgeom::Error) -> Self {
        match e {
            depthgeom::Error::Io(_) | depthgeom::Error::Parse { .. } => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Canonical intrinsics of a synthetic scene: focal length equal to the
/// resolution (about 53 degrees of field of view), principal point at the
/// image center.
pub fn canonical_intrinsics(res: usize) -> CliResult<Intrinsics<f64>> {
    Ok(Intrinsics::new(
        res as f64,
        res as f64,
        (res as f64 - 1.0) / 2.0,
        (res as f64 - 1.0) / 2.0,
        res,
        res,
    )?)
}

/// Renders the canonical scene of a kind. The plane sits at z = 2 with an
/// optional x slope; the hemisphere is a unit sphere at (0, 0, 3) against the
/// backing plane through its center.
pub fn canonical_scene(
    kind: SceneKind,
    res: usize,
    with_background: bool,
    tilt: f64,
) -> CliResult<Scene<f64>> {
    let intr = canonical_intrinsics(res)?;
    let scene = match kind {
        SceneKind::Plane => gen_plane(&intr, Vec3::new(tilt, 0.0, 1.0), 2.0)?,
        SceneKind::Hemisphere => {
            gen_hemisphere(&intr, Vec3::new(0.0, 0.0, 3.0), 1.0, with_background)?
        }
        SceneKind::Step => gen_step(&intr, 1.5, 2.5, res / 2)?,
        SceneKind::Wedge => {
            gen_wedge(
                &intr,
                (Vec3::new(0.4, 0.0, 1.0), 2.0),
                (Vec3::new(-0.4, 0.0, 1.0), 2.0),
            )?
            .0
        }
    };
    Ok(scene)
}

pub fn scene_label(kind: SceneKind, res: usize, sigma: f64) -> String {
    let name = match kind {
        SceneKind::Plane => "plane",
        SceneKind::Hemisphere => "hemisphere",
        SceneKind::Step => "step",
        SceneKind::Wedge => "wedge",
    };
    format!("{name}-{res}-s{sigma}")
}

/// The command line, recorded as a CSV comment for provenance. `--threads`
/// is omitted: it never affects results, and recording it would break
/// byte-identity of outputs across thread counts.
pub fn invocation() -> String {
    let mut out: Vec<String> = Vec::new();
    let mut args = std::env::args();
    while let Some(a) = args.next() {
        if a == "--threads" {
            args.next();
            continue;
        }
        if a.starts_with("--threads=") {
            continue;
        }
        out.push(a);
    }
    out.join(" ")
}

/// Short stable hash of the flag set.
pub fn config_hash(invocation: &str) -> String {
    let mut acc = 0xcbf2_9ce4_8422_2325u64;
    for b in invocation.bytes() {
        acc = mix64(acc ^ b as u64);
    }
    format!("{acc:016x}")
}

pub fn file_stem(path: &std::path::Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".into())
}
