use super::Cube;

/// Largest number of cubes whose interiors share a common point.
///
/// Boxes have the Helly property, so a deepest point can be taken as the
/// lower corner `max lo` of the clique containing it; every coordinate of
/// that corner is the lower face of a box overlapping the others. Candidates
/// are therefore built per box from the lower faces of its neighbors.
pub fn max_overlap(cubes: &[Cube]) -> usize {
    if cubes.is_empty() {
        return 0;
    }
    let n = cubes[0].dim();
    let neighbors = overlapping_pairs(cubes);
    let mut best = 1;
    let mut axis_vals: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut point = vec![0.0; n];
    for (i, cube) in cubes.iter().enumerate() {
        let group = &neighbors[i];
        if group.len() < best {
            continue;
        }
        for (axis, vals) in axis_vals.iter_mut().enumerate() {
            vals.clear();
            vals.push(cube.lo(axis));
            vals.extend(
                group
                    .iter()
                    .map(|&j| cubes[j].lo(axis))
                    .filter(|&v| v > cube.lo(axis) && v < cube.hi(axis)),
            );
            vals.sort_by(f64::total_cmp);
            vals.dedup();
        }
        let total: usize = axis_vals.iter().map(Vec::len).product();
        for code in 0..total {
            let mut rem = code;
            for axis in 0..n {
                let vals = &axis_vals[axis];
                point[axis] = vals[rem % vals.len()];
                rem /= vals.len();
            }
            let depth = 1 + group
                .iter()
                .filter(|&&j| {
                    let c = &cubes[j];
                    (0..n).all(|a| c.lo(a) <= point[a] && point[a] < c.hi(a))
                })
                .count();
            best = best.max(depth);
        }
    }
    best
}

/// For each cube, the other cubes whose interiors meet it.
pub(crate) fn overlapping_pairs(cubes: &[Cube]) -> Vec<Vec<usize>> {
    let n = cubes.first().map_or(0, Cube::dim);
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| cubes[a].lo(0).total_cmp(&cubes[b].lo(0)));
    let mut out = vec![Vec::new(); cubes.len()];
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let lo = cubes[i].lo(0);
        active.retain(|&j| cubes[j].hi(0) > lo);
        for &j in &active {
            let meet = (1..n).all(|a| {
                cubes[i].lo(a) < cubes[j].hi(a) && cubes[j].lo(a) < cubes[i].hi(a)
            }) && cubes[i].lo(0) < cubes[j].hi(0);
            if meet {
                out[i].push(j);
                out[j].push(i);
            }
        }
        active.push(i);
    }
    for v in &mut out {
        v.sort_unstable();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64, s: f64) -> Cube {
        Cube::new(&[x, y], s).unwrap()
    }

    #[test]
    fn disjoint_and_touching_cubes_have_depth_one() {
        let cubes = [sq(0.5, 0.5, 1.0), sq(1.5, 0.5, 1.0), sq(0.5, 1.5, 1.0)];
        assert_eq!(max_overlap(&cubes), 1);
    }

    #[test]
    fn nested_and_crossing_cubes() {
        let cubes = [
            sq(0.0, 0.0, 4.0),
            sq(0.5, 0.5, 1.0),
            sq(0.9, 0.9, 1.0),
            sq(3.0, 3.0, 0.5),
        ];
        assert_eq!(max_overlap(&cubes), 3);
    }

    #[test]
    fn matches_arrangement_cells() {
        // brute force: depth at the midpoint of every cell of the arrangement
        // cut out by all box faces
        let cubes: Vec<Cube> = (0..12)
            .map(|i| {
                let t = i as f64;
                sq((t * 0.37) % 2.0, (t * 0.61) % 2.0, 0.4 + (t * 0.13) % 0.7)
            })
            .collect();
        let mids = |axis: usize| {
            let mut v: Vec<f64> = cubes.iter().flat_map(|c| [c.lo(axis), c.hi(axis)]).collect();
            v.sort_by(f64::total_cmp);
            v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect::<Vec<_>>()
        };
        let (xs, ys) = (mids(0), mids(1));
        let mut brute = 0;
        for &x in &xs {
            for &y in &ys {
                let d = cubes
                    .iter()
                    .filter(|c| c.lo(0) < x && x < c.hi(0) && c.lo(1) < y && y < c.hi(1))
                    .count();
                brute = brute.max(d);
            }
        }
        assert_eq!(max_overlap(&cubes), brute);
    }
}
