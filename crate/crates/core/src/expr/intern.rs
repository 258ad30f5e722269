//! Global hash-consing table.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, Weak};

use super::{Expr, Func, Kind, Node, Rational};

const SHARDS: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Rational(i128, i128),
    Float(u64),
    Coord(usize),
    Param(Arc<str>),
    Sum(Box<[u64]>),
    Product(Box<[u64]>),
    Quotient(u64, u64),
    Pow(u64, i128, i128),
    Neg(u64),
    Func(Func, u64),
}

struct Shard {
    map: HashMap<Key, Weak<Node>>,
    purge_at: usize,
}

fn shards() -> &'static [Mutex<Shard>] {
    static TABLE: OnceLock<Vec<Mutex<Shard>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..SHARDS)
            .map(|_| Mutex::new(Shard { map: HashMap::new(), purge_at: 1024 }))
            .collect()
    })
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn key_of(kind: &Kind) -> Key {
    let ids = |xs: &[Expr]| xs.iter().map(|x| x.id()).collect::<Box<[u64]>>();
    match kind {
        Kind::Rational(q) => Key::Rational(*q.numer(), *q.denom()),
        // normalise -0.0 so that it interns with 0.0
        Kind::Float(x) => Key::Float(if *x == 0.0 { 0u64 } else { x.to_bits() }),
        Kind::Coord(i) => Key::Coord(*i),
        Kind::Param(p) => Key::Param(p.clone()),
        Kind::Sum(xs) => Key::Sum(ids(xs)),
        Kind::Product(xs) => Key::Product(ids(xs)),
        Kind::Quotient(a, b) => Key::Quotient(a.id(), b.id()),
        Kind::Pow(a, e) => Key::Pow(a.id(), *e.numer(), *e.denom()),
        Kind::Neg(a) => Key::Neg(a.id()),
        Kind::Func(f, a) => Key::Func(*f, a.id()),
    }
}

/// Structural hash built from child structural hashes, so it does not depend
/// on ids (and therefore not on construction order).
fn structural_hash(kind: &Kind) -> u64 {
    let mut h = DefaultHasher::new();
    match kind {
        Kind::Rational(q) => (0u8, q.numer(), q.denom()).hash(&mut h),
        Kind::Float(x) => (1u8, if *x == 0.0 { 0 } else { x.to_bits() }).hash(&mut h),
        Kind::Coord(i) => (2u8, i).hash(&mut h),
        Kind::Param(p) => (3u8, &**p).hash(&mut h),
        Kind::Sum(xs) => {
            4u8.hash(&mut h);
            for x in xs.iter() {
                x.structural_hash().hash(&mut h);
            }
        }
        Kind::Product(xs) => {
            5u8.hash(&mut h);
            for x in xs.iter() {
                x.structural_hash().hash(&mut h);
            }
        }
        Kind::Quotient(a, b) => (6u8, a.structural_hash(), b.structural_hash()).hash(&mut h),
        Kind::Pow(a, e) => (7u8, a.structural_hash(), e.numer(), e.denom()).hash(&mut h),
        Kind::Neg(a) => (8u8, a.structural_hash()).hash(&mut h),
        Kind::Func(f, a) => (9u8, *f, a.structural_hash()).hash(&mut h),
    }
    h.finish()
}

fn deps_of(kind: &Kind) -> u64 {
    match kind {
        Kind::Rational(_) | Kind::Float(_) | Kind::Param(_) => 0,
        Kind::Coord(i) => {
            assert!(*i < super::MAX_COORDS, "coordinate index {i} exceeds supported dimension");
            1u64 << i
        }
        Kind::Sum(xs) | Kind::Product(xs) => xs.iter().fold(0, |m, x| m | x.coord_mask()),
        Kind::Quotient(a, b) => a.coord_mask() | b.coord_mask(),
        Kind::Pow(a, _) | Kind::Neg(a) | Kind::Func(_, a) => a.coord_mask(),
    }
}

/// Intern a node. Children must already be interned (they are, since every
/// `Expr` comes from here).
pub(crate) fn make(kind: Kind) -> Expr {
    if let Kind::Rational(q) = &kind {
        debug_assert!(*q.denom() > 0);
    }
    let key = key_of(&kind);
    let hash = structural_hash(&kind);
    let mut kh = DefaultHasher::new();
    key.hash(&mut kh);
    let shard = &shards()[(kh.finish() as usize) % SHARDS];
    let mut guard = shard.lock().unwrap_or_else(|p| p.into_inner());
    if let Some(w) = guard.map.get(&key) {
        if let Some(node) = w.upgrade() {
            return Expr(node);
        }
    }
    let node = Arc::new(Node {
        id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        hash,
        deps: deps_of(&kind),
        kind,
    });
    guard.map.insert(key, Arc::downgrade(&node));
    if guard.map.len() >= guard.purge_at {
        guard.map.retain(|_, w| w.strong_count() > 0);
        guard.purge_at = (guard.map.len() * 2).max(1024);
    }
    Expr(node)
}

pub(crate) fn rational(q: Rational) -> Expr {
    make(Kind::Rational(q))
}
