//! Binary-format contract tests for the lookup-table file.

use wepe::encoder::EncoderConfig;
use wepe::lut::{Lut, LutError, LUT_MAGIC, LUT_VERSION};
use wepe::surrogate::SurrogateConfig;

fn build_bytes(res: u32) -> (Lut, Vec<u8>) {
    let lut = Lut::build(&EncoderConfig::default(), res).unwrap();
    let mut bytes = Vec::new();
    lut.write_to(&mut bytes).unwrap();
    (lut, bytes)
}

#[test]
fn header_layout_is_pinned() {
    let (_, bytes) = build_bytes(8);
    assert_eq!(&bytes[0..4], &LUT_MAGIC);
    assert_eq!(&bytes[0..4], b"WEPE");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), LUT_VERSION);
    assert_eq!(bytes[8], 0, "mode byte for the pre-train encoder");
    assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 8);
    let json_len = u32::from_le_bytes(bytes[13..17].try_into().unwrap()) as usize;
    let json = &bytes[17..17 + json_len];
    let cfg: EncoderConfig = serde_json::from_slice(json).unwrap();
    assert_eq!(cfg, EncoderConfig::default());
    // magic + version + mode + res + len + json + data + crc
    assert_eq!(bytes.len(), 4 + 4 + 1 + 4 + 4 + json_len + 8 * 8 * 4 * 4 + 4);
}

#[test]
fn file_round_trip_is_byte_identical() {
    let (lut, bytes) = build_bytes(16);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.lut");
    lut.write_file(&path).unwrap();
    let on_disk = std::fs::read(&path).unwrap();
    assert_eq!(on_disk, bytes);
    let back = Lut::read_file(&path).unwrap();
    assert_eq!(back, lut);
    let mut bytes2 = Vec::new();
    back.write_to(&mut bytes2).unwrap();
    assert_eq!(bytes2, bytes);
}

#[test]
fn surrogate_snapshot_round_trips() {
    let lut = Lut::build_surrogate(&SurrogateConfig::default(), 6).unwrap();
    let mut bytes = Vec::new();
    lut.write_to(&mut bytes).unwrap();
    assert_eq!(bytes[8], 1);
    let back = Lut::read_from(bytes.as_slice()).unwrap();
    assert_eq!(back, lut);
}

#[test]
fn corrupt_magic_rejected() {
    let (_, mut bytes) = build_bytes(4);
    bytes[1] = b'!';
    let err = Lut::read_from(bytes.as_slice()).unwrap_err();
    assert!(matches!(err, LutError::MalformedFile(ref m) if m.contains("magic")), "{err}");
}

#[test]
fn unsupported_version_rejected() {
    let (_, mut bytes) = build_bytes(4);
    bytes[4..8].copy_from_slice(&99u32.to_le_bytes());
    let err = Lut::read_from(bytes.as_slice()).unwrap_err();
    assert!(matches!(err, LutError::MalformedFile(ref m) if m.contains("version")), "{err}");
}

#[test]
fn truncated_payload_reports_byte_counts() {
    let (_, bytes) = build_bytes(4);
    // Drop the CRC and the tail of the data section.
    let cut = &bytes[..bytes.len() - 40];
    let err = Lut::read_from(cut).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("truncated"), "{msg}");
    assert!(msg.contains("expected") && msg.contains("got"), "{msg}");
}

#[test]
fn flipped_data_bit_fails_checksum() {
    let (_, mut bytes) = build_bytes(4);
    let data_start = bytes.len() - 4 - 4 * 4 * 4 * 4;
    bytes[data_start + 5] ^= 0x01;
    let err = Lut::read_from(bytes.as_slice()).unwrap_err();
    assert!(matches!(err, LutError::MalformedFile(ref m) if m.contains("checksum")), "{err}");
}

#[test]
fn non_finite_values_rejected() {
    let (_, mut bytes) = build_bytes(4);
    let data_start = bytes.len() - 4 - 4 * 4 * 4 * 4;
    bytes[data_start..data_start + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    // Fix the checksum so the non-finite check itself is exercised.
    let data_end = bytes.len() - 4;
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes[data_start..data_end]);
    let crc = hasher.finalize();
    bytes[data_end..].copy_from_slice(&crc.to_le_bytes());
    let err = Lut::read_from(bytes.as_slice()).unwrap_err();
    assert!(matches!(err, LutError::MalformedFile(ref m) if m.contains("non-finite")), "{err}");
}

#[test]
fn mode_byte_must_be_known() {
    let (_, mut bytes) = build_bytes(4);
    bytes[8] = 7;
    let err = Lut::read_from(bytes.as_slice()).unwrap_err();
    assert!(matches!(err, LutError::MalformedFile(ref m) if m.contains("mode")), "{err}");
}
