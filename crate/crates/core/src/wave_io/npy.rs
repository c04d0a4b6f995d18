//! NPY v1.0 container restricted to little-endian `f32`, C order.

use std::path::Path;

use crate::{Error, Result, Tensor};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE: usize = 10;
const ALIGN: usize = 64;

fn shape_tuple(shape: &[usize]) -> String {
    match shape {
        [] => "()".to_string(),
        [n] => format!("({n},)"),
        _ => format!(
            "({})",
            shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

pub fn encode_npy(tensor: &Tensor) -> Vec<u8> {
    let mut header = format!(
        "{{'descr': '<f4', 'fortran_order': False, 'shape': {}, }}",
        shape_tuple(tensor.shape())
    );
    // Pad with spaces and a final newline so the payload starts on a 64-byte boundary.
    let unpadded = PREAMBLE + header.len() + 1;
    let padding = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.push_str(&" ".repeat(padding));
    header.push('\n');

    let mut out = Vec::with_capacity(PREAMBLE + header.len() + tensor.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn dict_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let needle = format!("'{key}':");
    let start = header.find(&needle)? + needle.len();
    let rest = header[start..].trim_start();
    if rest.starts_with('(') {
        let end = rest.find(')')?;
        Some(&rest[..=end])
    } else {
        let end = rest.find([',', '}']).unwrap_or(rest.len());
        Some(rest[..end].trim())
    }
}

fn parse_shape(raw: &str) -> Option<Vec<usize>> {
    let inner = raw.strip_prefix('(')?.strip_suffix(')')?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}

/// Decodes NPY bytes; `path` is only used in error messages.
pub fn decode_npy(bytes: &[u8], path: &Path) -> Result<Tensor> {
    let bad = |message: String| Error::TensorFormat {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < PREAMBLE || &bytes[..6] != MAGIC {
        return Err(bad("missing NPY magic".into()));
    }
    if bytes[6] != 1 || bytes[7] != 0 {
        return Err(bad(format!("unsupported version {}.{}", bytes[6], bytes[7])));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let payload_start = PREAMBLE + header_len;
    if bytes.len() < payload_start {
        return Err(bad("truncated header".into()));
    }
    let header = std::str::from_utf8(&bytes[PREAMBLE..payload_start])
        .map_err(|_| bad("header is not valid text".into()))?;
    match dict_value(header, "descr") {
        Some("'<f4'") => {}
        other => return Err(bad(format!("unsupported descr {other:?}"))),
    }
    if dict_value(header, "fortran_order") != Some("False") {
        return Err(bad("only C-ordered arrays are supported".into()));
    }
    let shape = dict_value(header, "shape")
        .and_then(parse_shape)
        .ok_or_else(|| bad("unreadable shape".into()))?;

    let count: usize = shape.iter().product();
    let payload = &bytes[payload_start..];
    if payload.len() != count * 4 {
        return Err(bad(format!(
            "header declares {count} elements ({} bytes) but payload has {} bytes",
            count * 4,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor::new(shape, data)
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let path = path.as_ref();
    if tensor.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::TensorFormat {
            path: path.to_path_buf(),
            message: "refusing to write non-finite values".into(),
        });
    }
    std::fs::write(path, encode_npy(tensor)).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_npy(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_stack_file_size() {
        let t = Tensor::zeros(vec![6, 400, 96]);
        let bytes = encode_npy(&t);
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((PREAMBLE + header_len) % 64, 0);
        assert_eq!(bytes.len(), PREAMBLE + header_len + 6 * 400 * 96 * 4);
        let header = std::str::from_utf8(&bytes[10..10 + header_len]).unwrap();
        assert!(header.starts_with("{'descr': '<f4', 'fortran_order': False, 'shape': (6, 400, 96), }"));
        assert!(header.ends_with('\n'));
    }

    #[test]
    fn one_dimensional_shape_has_trailing_comma() {
        let t = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let bytes = encode_npy(&t);
        assert!(std::str::from_utf8(&bytes[10..64]).unwrap().contains("(3,)"));
        assert_eq!(decode_npy(&bytes, Path::new("x")).unwrap(), t);
    }

    #[test]
    fn truncated_payload_is_error() {
        let t = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut bytes = encode_npy(&t);
        bytes.pop();
        let err = decode_npy(&bytes, Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("payload"), "{err}");
        bytes.extend_from_slice(&[0, 0, 0, 0, 0]);
        assert!(decode_npy(&bytes, Path::new("x")).is_err());
    }

    #[test]
    fn rejects_other_dtypes() {
        let t = Tensor::new(vec![1], vec![1.0]).unwrap();
        let mut bytes = encode_npy(&t);
        let pos = bytes.windows(3).position(|w| w == b"<f4").unwrap();
        bytes[pos + 2] = b'8';
        assert!(decode_npy(&bytes, Path::new("x")).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.npy");
        let t = Tensor::new(vec![2, 3], vec![0.5, -1.0, 3.25, 1e-30, -0.0, 7.0]).unwrap();
        write_tensor(&p, &t).unwrap();
        assert_eq!(read_tensor(&p).unwrap(), t);
        let nan = Tensor::new(vec![1], vec![f32::NAN]).unwrap();
        assert!(write_tensor(&p, &nan).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            shape in prop::collection::vec(0usize..6, 0..4),
            seed in any::<u64>(),
        ) {
            let n: usize = shape.iter().product();
            let mut state = seed;
            let data: Vec<f32> = (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    f32::from_bits((state >> 32) as u32 & 0xBF7F_FFFF)
                })
                .collect();
            let t = Tensor::new(shape, data).unwrap();
            let bytes = encode_npy(&t);
            let back = decode_npy(&bytes, Path::new("p")).unwrap();
            prop_assert_eq!(back.shape(), t.shape());
            let a: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = t.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(encode_npy(&back), bytes);
        }
    }
}
