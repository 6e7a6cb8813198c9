//! Persistence: binary field/panel/matrix formats, portable-graymap import,
//! dataset manifests, and the stack definition file.
//!
//! All binary formats share one 16-byte header:
//!
//! ```text
//! bytes 0..4   magic ("AFLD" field, "AINT" intensity, "APNL" panel, "AMTX" matrix)
//! bytes 4..6   format version, u16 little-endian
//! bytes 6..10  grid_side, u32 little-endian
//! bytes 10..16 reserved (zero)
//! ```
//!
//! followed by row-major little-endian float64 payloads: (re, im) pairs for
//! AFLD, plain values for AINT, (absorption, phase) pairs for APNL, and
//! N²·N² (re, im) pairs for AMTX. Headers carry no physical scale, so
//! readers that produce fields take the pixel pitch as an argument.
//!
//! A stack definition is a TOML file listing the geometry plus one APNL
//! file per panel (paths relative to the TOML file); see [`save_stack`].

use crate::classify::LabeledPattern;
use crate::error::{Error, Result};
use crate::field::{AmplitudeField, IntensityImage};
use crate::matrix::SystemMatrix;
use crate::optics::{DiffractivePanel, EvanescentMode, OpticalStack, PropagationSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Version written into every binary header.
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 16;

fn encode_header(magic: &[u8; 4], grid_side: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid_side as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 6]);
    out
}

/// Parse and validate a header, returning (grid_side, payload bytes).
fn decode_header<'a>(bytes: &'a [u8], magic: &[u8; 4], path: &Path) -> Result<(usize, &'a [u8])> {
    let name = path.display();
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{name}: truncated header")));
    }
    if &bytes[0..4] != magic {
        return Err(Error::Format(format!(
            "{name}: bad magic {:?}, expected {:?}",
            &bytes[0..4],
            std::str::from_utf8(magic).unwrap_or("?")
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{name}: unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let grid_side = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    if grid_side == 0 {
        return Err(Error::Format(format!("{name}: zero grid side")));
    }
    Ok((grid_side, &bytes[HEADER_LEN..]))
}

fn expect_payload(payload: &[u8], doubles: usize, path: &Path) -> Result<Vec<f64>> {
    if payload.len() != doubles * 8 {
        return Err(Error::Format(format!(
            "{}: payload is {} bytes, expected {}",
            path.display(),
            payload.len(),
            doubles * 8
        )));
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn push_doubles(out: &mut Vec<u8>, values: impl Iterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Write a complex field as AFLD.
pub fn write_field(path: impl AsRef<Path>, field: &AmplitudeField) -> Result<()> {
    let mut out = encode_header(b"AFLD", field.grid_side());
    push_doubles(
        &mut out,
        field.pixels().iter().flat_map(|z| [z.re, z.im]),
    );
    fs::write(path, out)?;
    Ok(())
}

/// Read an AFLD field; the header carries no scale, so the pixel pitch is
/// supplied by the caller.
pub fn read_field(path: impl AsRef<Path>, pixel_pitch: f64) -> Result<AmplitudeField> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let (n, payload) = decode_header(&bytes, b"AFLD", path)?;
    let values = expect_payload(payload, 2 * n * n, path)?;
    let data = values
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    AmplitudeField::new(n, pixel_pitch, data)
}

/// Write an intensity image as AINT.
pub fn write_intensity(path: impl AsRef<Path>, image: &IntensityImage) -> Result<()> {
    let mut out = encode_header(b"AINT", image.grid_side());
    push_doubles(&mut out, image.values().iter().copied());
    fs::write(path, out)?;
    Ok(())
}

/// Read an AINT intensity image.
pub fn read_intensity(path: impl AsRef<Path>) -> Result<IntensityImage> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let (n, payload) = decode_header(&bytes, b"AINT", path)?;
    let values = expect_payload(payload, n * n, path)?;
    IntensityImage::new(n, values)
}

/// Write a panel as APNL ((absorption, phase) pairs).
pub fn write_panel(path: impl AsRef<Path>, panel: &DiffractivePanel) -> Result<()> {
    let mut out = encode_header(b"APNL", panel.grid_side());
    push_doubles(
        &mut out,
        panel
            .absorption()
            .iter()
            .zip(panel.phase())
            .flat_map(|(a, b)| [*a, *b]),
    );
    fs::write(path, out)?;
    Ok(())
}

/// Read an APNL panel.
pub fn read_panel(path: impl AsRef<Path>) -> Result<DiffractivePanel> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let (n, payload) = decode_header(&bytes, b"APNL", path)?;
    let values = expect_payload(payload, 2 * n * n, path)?;
    let absorption = values.iter().step_by(2).copied().collect();
    let phase = values.iter().skip(1).step_by(2).copied().collect();
    DiffractivePanel::new(n, absorption, phase)
}

/// Write a system matrix as AMTX (row-major complex doubles, N²×N²).
pub fn write_matrix(path: impl AsRef<Path>, matrix: &SystemMatrix) -> Result<()> {
    let mut out = encode_header(b"AMTX", matrix.grid_side());
    let entries = matrix.entries();
    for r in 0..entries.nrows() {
        for c in 0..entries.ncols() {
            let z = entries[(r, c)];
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read an AMTX matrix; pixel pitch supplied by the caller as for fields.
pub fn read_matrix(path: impl AsRef<Path>, pixel_pitch: f64) -> Result<SystemMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let (n, payload) = decode_header(&bytes, b"AMTX", path)?;
    let dim = n * n;
    let values = expect_payload(payload, 2 * dim * dim, path)?;
    let entries = DMatrix::from_fn(dim, dim, |r, c| {
        let base = 2 * (r * dim + c);
        Complex64::new(values[base], values[base + 1])
    });
    SystemMatrix::from_entries(n, pixel_pitch, entries)
}

// ---------------------------------------------------------------------------
// Portable graymap import (P2 ASCII / P5 binary, single channel, max 255).
// ---------------------------------------------------------------------------

/// Read a PGM image (P2 or P5, square, maxval ≤ 255) as a real non-negative
/// amplitude field with values in [0, 1] (gray / maxval).
pub fn read_pgm(path: impl AsRef<Path>, pixel_pitch: f64) -> Result<AmplitudeField> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let name = path.display();

    // Tokenize the header: magic, width, height, maxval; '#' starts a
    // comment running to end of line.
    let mut pos = 0usize;
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 && pos < bytes.len() {
        match bytes[pos] {
            b'#' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => pos += 1,
            _ => {
                let start = pos;
                while pos < bytes.len()
                    && !bytes[pos].is_ascii_whitespace()
                    && bytes[pos] != b'#'
                {
                    pos += 1;
                }
                tokens.push(
                    std::str::from_utf8(&bytes[start..pos])
                        .map_err(|_| Error::Format(format!("{name}: non-ASCII header")))?
                        .to_string(),
                );
            }
        }
    }
    if tokens.len() < 4 {
        return Err(Error::Format(format!("{name}: incomplete PGM header")));
    }
    let magic = tokens[0].as_str();
    let parse_dim = |s: &String, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("{name}: bad PGM {what} {s:?}")))
    };
    let width = parse_dim(&tokens[1], "width")?;
    let height = parse_dim(&tokens[2], "height")?;
    let maxval = parse_dim(&tokens[3], "maxval")?;
    if width != height || width == 0 {
        return Err(Error::Format(format!(
            "{name}: only square images are supported, got {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!(
            "{name}: maxval must be in 1..=255, got {maxval}"
        )));
    }
    let pixels = width * height;
    let grays: Vec<u16> = match magic {
        "P2" => {
            let text = std::str::from_utf8(&bytes[pos..])
                .map_err(|_| Error::Format(format!("{name}: non-ASCII P2 payload")))?;
            let values: Vec<u16> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .map(|t| {
                    t.parse::<u16>()
                        .map_err(|_| Error::Format(format!("{name}: bad P2 value {t:?}")))
                })
                .collect::<Result<_>>()?;
            values
        }
        "P5" => {
            // Exactly one whitespace byte separates maxval from the raster.
            let raster = &bytes[pos + 1..];
            if raster.len() != pixels {
                return Err(Error::Format(format!(
                    "{name}: P5 raster is {} bytes, expected {pixels}",
                    raster.len()
                )));
            }
            raster.iter().map(|b| *b as u16).collect()
        }
        other => {
            return Err(Error::Format(format!(
                "{name}: unsupported PGM magic {other:?} (only P2/P5)"
            )));
        }
    };
    if grays.len() != pixels {
        return Err(Error::Format(format!(
            "{name}: {} pixel values, expected {pixels}",
            grays.len()
        )));
    }
    let data = grays
        .iter()
        .map(|g| {
            if *g as usize > maxval {
                return Err(Error::Format(format!(
                    "{name}: pixel value {g} exceeds maxval {maxval}"
                )));
            }
            Ok(Complex64::new(*g as f64 / maxval as f64, 0.0))
        })
        .collect::<Result<_>>()?;
    AmplitudeField::new(width, pixel_pitch, data)
}

// ---------------------------------------------------------------------------
// Dataset manifest: one "<file> <label>" entry per line.
// ---------------------------------------------------------------------------

/// Load a labeled dataset from a manifest file. Each non-blank,
/// non-comment ('#') line reads `<relative-path> <label>`; referenced files
/// may be PGM images or AFLD fields (by extension) and are normalized to
/// unit L² norm on load.
pub fn load_manifest(path: impl AsRef<Path>, pixel_pitch: f64) -> Result<Vec<LabeledPattern>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (file, label) = match (parts.next(), parts.next(), parts.next()) {
            (Some(f), Some(l), None) => (f, l),
            _ => {
                return Err(Error::Format(format!(
                    "{}:{}: expected '<file> <label>', got {raw:?}",
                    path.display(),
                    line_no + 1
                )));
            }
        };
        let label: usize = label.parse().map_err(|_| {
            Error::Format(format!(
                "{}:{}: bad label {label:?}",
                path.display(),
                line_no + 1
            ))
        })?;
        let file_path = dir.join(file);
        let ext = file_path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        let field = match ext.as_str() {
            "pgm" => read_pgm(&file_path, pixel_pitch)?,
            "afld" => read_field(&file_path, pixel_pitch)?,
            other => {
                return Err(Error::Format(format!(
                    "{}:{}: unsupported pattern extension {other:?}",
                    path.display(),
                    line_no + 1
                )));
            }
        };
        out.push(LabeledPattern::from_unnormalized(field, label)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Stack definition file (TOML + APNL panel files).
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct StackFile {
    grid_side: usize,
    wavelength: f64,
    pixel_pitch: f64,
    /// layers + 1 hops, in physical order.
    hops: Vec<HopEntry>,
    /// One APNL file per panel, in physical order.
    panels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HopEntry {
    spacing: f64,
    evanescent_mode: EvanescentMode,
    pad_factor: usize,
}

/// Save a stack as `<dir>/<name>.stack.toml` plus one
/// `<name>.panel<i>.apnl` per panel; returns the TOML path.
pub fn save_stack(dir: impl AsRef<Path>, name: &str, stack: &OpticalStack) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut panels = Vec::with_capacity(stack.layer_count());
    for (i, panel) in stack.panels().iter().enumerate() {
        let file = format!("{name}.panel{i}.apnl");
        write_panel(dir.join(&file), panel)?;
        panels.push(file);
    }
    let model = StackFile {
        grid_side: stack.grid_side(),
        wavelength: stack.wavelength(),
        pixel_pitch: stack.pixel_pitch(),
        hops: stack
            .propagations()
            .iter()
            .map(|p| HopEntry {
                spacing: p.spacing(),
                evanescent_mode: p.evanescent_mode(),
                pad_factor: p.pad_factor(),
            })
            .collect(),
        panels,
    };
    let text = toml::to_string_pretty(&model)
        .map_err(|e| Error::Format(format!("stack serialization: {e}")))?;
    let path = dir.join(format!("{name}.stack.toml"));
    fs::write(&path, text)?;
    Ok(path)
}

/// Load a stack definition written by [`save_stack`] (panel paths resolve
/// relative to the TOML file).
pub fn load_stack(path: impl AsRef<Path>) -> Result<OpticalStack> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let model: StackFile = toml::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut hops = Vec::with_capacity(model.hops.len());
    for h in &model.hops {
        hops.push(
            PropagationSpec::new(h.spacing, model.wavelength, model.pixel_pitch)?
                .with_evanescent_mode(h.evanescent_mode)
                .with_pad_factor(h.pad_factor)?,
        );
    }
    let mut panels = Vec::with_capacity(model.panels.len());
    for file in &model.panels {
        panels.push(read_panel(dir.join(file))?);
    }
    OpticalStack::new(model.grid_side, panels, hops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::EvanescentMode;
    use crate::synth;
    use tempfile::tempdir;

    #[test]
    fn field_round_trip_is_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.afld");
        let field = synth::random_unit_field(8, 0.4, 1);
        write_field(&path, &field).unwrap();
        let back = read_field(&path, 0.4).unwrap();
        assert_eq!(field.pixels(), back.pixels());
        assert_eq!(back.pixel_pitch(), 0.4);
    }

    #[test]
    fn intensity_round_trip_is_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("i.aint");
        let image = synth::random_unit_field(4, 0.4, 2).intensity();
        write_intensity(&path, &image).unwrap();
        let back = read_intensity(&path).unwrap();
        assert_eq!(image.values(), back.values());
    }

    #[test]
    fn panel_round_trip_is_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.apnl");
        let stack = synth::random_stack(4, 1, 1, EvanescentMode::Decay, 3).unwrap();
        let panel = &stack.panels()[0];
        write_panel(&path, panel).unwrap();
        let back = read_panel(&path).unwrap();
        assert_eq!(panel.absorption(), back.absorption());
        assert_eq!(panel.phase(), back.phase());
    }

    #[test]
    fn matrix_round_trip_is_bitwise() {
        use crate::matrix::SystemMatrix;
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.amtx");
        let stack = synth::random_stack(2, 1, 1, EvanescentMode::Decay, 4).unwrap();
        let m = SystemMatrix::assemble(&stack).unwrap();
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path, stack.pixel_pitch()).unwrap();
        assert_eq!(m.entries(), back.entries());
    }

    #[test]
    fn corrupted_headers_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.afld");
        let field = synth::random_unit_field(2, 0.4, 5);
        write_field(&path, &field).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_field(&path, 0.4), Err(Error::Format(_))));

        write_field(&path, &field).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99; // version
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_field(&path, 0.4), Err(Error::Format(_))));

        write_field(&path, &field).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_field(&path, 0.4), Err(Error::Format(_))));
    }

    #[test]
    fn wrong_magic_for_type_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.aint");
        let field = synth::random_unit_field(2, 0.4, 6);
        write_field(&path, &field).unwrap();
        assert!(matches!(read_intensity(&path), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_ascii_with_comments_parses() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let text = "P2\n# a comment\n2 2\n255\n0 128\n255 64\n";
        std::fs::write(&path, text).unwrap();
        let field = read_pgm(&path, 0.4).unwrap();
        let px = field.pixels();
        assert_eq!(px[0].re, 0.0);
        assert!((px[1].re - 128.0 / 255.0).abs() < 1e-15);
        assert_eq!(px[2].re, 1.0);
        for z in px {
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn pgm_binary_parses_and_bad_shapes_fail() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 64]);
        std::fs::write(&path, &bytes).unwrap();
        let field = read_pgm(&path, 0.4).unwrap();
        assert_eq!(field.grid_side(), 2);
        assert_eq!(field.pixels()[2].re, 1.0);

        let rect = dir.path().join("rect.pgm");
        std::fs::write(&rect, "P2\n2 3\n255\n0 0 0 0 0 0\n").unwrap();
        assert!(matches!(read_pgm(&rect, 0.4), Err(Error::Format(_))));

        let deep = dir.path().join("deep.pgm");
        std::fs::write(&deep, "P2\n2 2\n65535\n0 0 0 0\n").unwrap();
        assert!(matches!(read_pgm(&deep, 0.4), Err(Error::Format(_))));
    }

    #[test]
    fn manifest_loads_normalized_patterns() {
        let dir = tempdir().unwrap();
        std::fs::write(dir.path().join("a.pgm"), "P2\n2 2\n255\n10 20\n30 40\n").unwrap();
        let field = synth::random_unit_field(2, 0.4, 7);
        write_field(dir.path().join("b.afld"), &field).unwrap();
        let manifest = dir.path().join("set.txt");
        std::fs::write(
            &manifest,
            "# dataset\na.pgm 0\n\nb.afld 1   # trailing comment\n",
        )
        .unwrap();
        let data = load_manifest(&manifest, 0.4).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].label, 0);
        assert_eq!(data[1].label, 1);
        for p in &data {
            assert!((p.field.l2_norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn manifest_rejects_malformed_lines() {
        let dir = tempdir().unwrap();
        let manifest = dir.path().join("bad.txt");
        std::fs::write(&manifest, "only_a_path\n").unwrap();
        assert!(matches!(load_manifest(&manifest, 0.4), Err(Error::Format(_))));
        std::fs::write(&manifest, "a.pgm not_a_number\n").unwrap();
        assert!(matches!(load_manifest(&manifest, 0.4), Err(Error::Format(_))));
        std::fs::write(&manifest, "# nothing here\n").unwrap();
        assert!(matches!(load_manifest(&manifest, 0.4), Err(Error::EmptyDataset)));
    }

    #[test]
    fn stack_round_trip_preserves_everything() {
        let dir = tempdir().unwrap();
        let stack = synth::random_stack(4, 2, 2, EvanescentMode::Truncate, 8).unwrap();
        let toml_path = save_stack(dir.path(), "demo", &stack).unwrap();
        let back = load_stack(&toml_path).unwrap();
        assert_eq!(back.grid_side(), stack.grid_side());
        assert_eq!(back.layer_count(), stack.layer_count());
        for (a, b) in stack.panels().iter().zip(back.panels()) {
            assert_eq!(a.phase(), b.phase());
            assert_eq!(a.absorption(), b.absorption());
        }
        for (a, b) in stack.propagations().iter().zip(back.propagations()) {
            assert_eq!(a.spacing(), b.spacing());
            assert_eq!(a.pad_factor(), b.pad_factor());
            assert_eq!(a.evanescent_mode(), b.evanescent_mode());
        }
        // End to end: identical forward output.
        let probe = synth::random_unit_field(4, stack.pixel_pitch(), 9);
        let out_a = stack.forward(&probe).unwrap();
        let out_b = back.forward(&probe).unwrap();
        assert_eq!(out_a.pixels(), out_b.pixels());
    }
}
