use std::sync::OnceLock;

/// Zig-zag order over an `n × n` block as raster indices `y * n + x`:
/// anti-diagonals from the DC corner, alternating direction.
pub fn zigzag_scan(n: usize) -> &'static [u16] {
    static TABLES: OnceLock<Vec<Vec<u16>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| (2..=6).map(|l| build(1 << l)).collect());
    assert!(n.is_power_of_two() && (4..=64).contains(&n), "scan size {n}");
    &tables[n.trailing_zeros() as usize - 2]
}

/// Inverse of [`zigzag_scan`]: scan index of each raster position.
pub fn zigzag_inverse(n: usize) -> &'static [u16] {
    static TABLES: OnceLock<Vec<Vec<u16>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (2..=6)
            .map(|l| {
                let fwd = zigzag_scan(1 << l);
                let mut inv = vec![0u16; fwd.len()];
                for (i, &p) in fwd.iter().enumerate() {
                    inv[p as usize] = i as u16;
                }
                inv
            })
            .collect()
    });
    &tables[n.trailing_zeros() as usize - 2]
}

fn build(n: usize) -> Vec<u16> {
    let mut out = Vec::with_capacity(n * n);
    for d in 0..2 * n - 1 {
        let lo = d.saturating_sub(n - 1);
        let hi = d.min(n - 1);
        if d % 2 == 0 {
            // Up and to the right: y descending.
            for y in (lo..=hi).rev() {
                out.push((y * n + (d - y)) as u16);
            }
        } else {
            for y in lo..=hi {
                out.push((y * n + (d - y)) as u16);
            }
        }
    }
    out
}

/// Interleaves the bits of cell coordinates (x in even bits), giving the
/// depth-first quadtree order of cells within a CTU.
pub fn morton(x: usize, y: usize) -> usize {
    let mut m = 0;
    for b in 0..16 {
        m |= ((x >> b) & 1) << (2 * b);
        m |= ((y >> b) & 1) << (2 * b + 1);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_is_permutation_starting_at_dc() {
        for n in [4, 8, 16, 32, 64] {
            let s = zigzag_scan(n);
            let mut seen = vec![false; n * n];
            for &i in s {
                assert!(!seen[i as usize]);
                seen[i as usize] = true;
            }
            assert_eq!(s[0], 0);
            assert_eq!(*s.last().unwrap() as usize, n * n - 1);
        }
        assert_eq!(&zigzag_scan(4)[..6], &[0, 1, 4, 8, 5, 2]);
    }

    #[test]
    fn morton_matches_quadtree_order() {
        // Depth-first quadrant enumeration of an 8×8 cell grid.
        fn walk(x: usize, y: usize, s: usize, out: &mut Vec<(usize, usize)>) {
            if s == 1 {
                out.push((x, y));
                return;
            }
            let h = s / 2;
            for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
                walk(x + dx, y + dy, h, out);
            }
        }
        let mut order = Vec::new();
        walk(0, 0, 8, &mut order);
        for (i, &(x, y)) in order.iter().enumerate() {
            assert_eq!(morton(x, y), i);
        }
    }
}
