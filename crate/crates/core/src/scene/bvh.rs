//! Flattened bounding volume hierarchy over scene faces.

use crate::geom::{Aabb, Point3, Ray};

const LEAF_SIZE: usize = 4;
const STACK_DEPTH: usize = 64;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the second child
    /// (the first child always follows its parent directly).
    offset: u32,
    /// Primitive count; zero marks an interior node.
    count: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    prims: Vec<u32>,
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut prims: Vec<u32> = (0..boxes.len() as u32).collect();
        let centroids: Vec<Point3> = boxes.iter().map(|b| b.center()).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1);
        if !boxes.is_empty() {
            build_rec(boxes, &centroids, &mut prims, 0, boxes.len(), &mut nodes);
        }
        Self { nodes, prims }
    }

    /// Visits every primitive whose box the ray overlaps within
    /// `[t_min, t_max]`. The visitor returns an updated `t_max`, which lets
    /// closest-hit queries shrink the search interval.
    #[inline]
    pub fn traverse<F>(&self, ray: &Ray, t_min: f64, mut t_max: f64, mut visit: F)
    where
        F: FnMut(u32, f64) -> f64,
    {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = [0u32; STACK_DEPTH];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp] as usize;
            let node = &self.nodes[idx];
            if node.bounds.hit(ray, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for &p in &self.prims[start..start + node.count as usize] {
                    t_max = visit(p, t_max);
                }
            } else {
                debug_assert!(sp + 2 <= STACK_DEPTH);
                stack[sp] = node.offset;
                stack[sp + 1] = (idx + 1) as u32;
                sp += 2;
            }
        }
    }
}

fn build_rec(
    boxes: &[Aabb],
    centroids: &[Point3],
    prims: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let slice = &mut prims[start..end];
    let bounds = slice
        .iter()
        .fold(Aabb::empty(), |acc, &p| acc.join(&boxes[p as usize]));
    let me = nodes.len();
    nodes.push(Node {
        bounds,
        offset: start as u32,
        count: (end - start) as u32,
    });
    if end - start <= LEAF_SIZE {
        return me;
    }

    let cb = Aabb::from_points(slice.iter().map(|&p| &centroids[p as usize]));
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    if ext[axis] <= 0.0 {
        // every centroid coincides; splitting cannot help
        return me;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
    });

    build_rec(boxes, centroids, prims, start, start + mid, nodes);
    let right = build_rec(boxes, centroids, prims, start + mid, end, nodes);
    nodes[me].offset = right as u32;
    nodes[me].count = 0;
    me
}
