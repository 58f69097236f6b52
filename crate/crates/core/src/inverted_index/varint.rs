//! LEB128-style unsigned varints: 7 data bits per byte, least significant
//! group first, high bit set on every byte except the last.

pub fn encode_u32(mut v: u32, out: &mut Vec<u8>) {
    while v >= 0x80 {
        out.push((v as u8 & 0x7f) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Decodes one value at `*pos`, advancing it. `None` on truncation or a value
/// that does not fit in 32 bits.
pub fn decode_u32(bytes: &[u8], pos: &mut usize) -> Option<u32> {
    let mut v: u32 = 0;
    for shift in (0..35).step_by(7) {
        let b = *bytes.get(*pos)?;
        *pos += 1;
        let group = u32::from(b & 0x7f);
        if shift == 28 && group > 0x0f {
            return None;
        }
        v |= group << shift;
        if b & 0x80 == 0 {
            return Some(v);
        }
    }
    None
}
