//! Canonical representatives of structural congruence classes.
//!
//! Restrictions are hoisted to the top of every continuation, parallel
//! components are flattened and sorted, guard branches are sorted with
//! redundant `fail` actions removed, and bound names are relabelled
//! `_0, _1, ...` so that alpha-equivalent processes coincide.

use std::collections::{BTreeSet, HashMap};

use super::{Arg, Binder, Branch, Cond, Name, Process};

const MAX_PERMUTATIONS: usize = 720;

pub fn congruence_normal_form(p: &Process) -> Process {
    Normalizer { pinned: &BTreeSet::new(), temp: 0 }.norm(p, 0)
}

/// Like [`congruence_normal_form`] but restricted names in `pinned` keep
/// their names when they are hoisted.
pub fn normal_form_pinned(p: &Process, pinned: &BTreeSet<Name>) -> Process {
    Normalizer { pinned, temp: 0 }.norm(p, 0)
}

fn canonical(i: usize) -> Name {
    Name::from(format!("_{i}"))
}

struct Normalizer<'a> {
    pinned: &'a BTreeSet<Name>,
    temp: usize,
}

struct Hoisted {
    pins: Vec<Name>,
    temps: Vec<Name>,
    threads: Vec<Process>,
}

impl Normalizer<'_> {
    fn fresh_temp(&mut self) -> Name {
        self.temp += 1;
        Name::from(format!("%{}", self.temp))
    }

    fn hoist(&mut self, p: &Process, out: &mut Hoisted) {
        match p {
            Process::Done => {}
            Process::Par(ps) => ps.iter().for_each(|q| self.hoist(q, out)),
            Process::New { name, body, .. } => {
                if self.pinned.contains(name) && !out.pins.contains(name) {
                    out.pins.push(name.clone());
                    self.hoist(body, out);
                } else {
                    let t = self.fresh_temp();
                    let body = body.substitute_names(&HashMap::from([(name.clone(), t.clone())]));
                    out.temps.push(t);
                    self.hoist(&body, out);
                }
            }
            q => out.threads.push(q.clone()),
        }
    }

    fn norm(&mut self, p: &Process, base: usize) -> Process {
        let mut h = Hoisted { pins: Vec::new(), temps: Vec::new(), threads: Vec::new() };
        self.hoist(p, &mut h);
        let n = h.temps.len();
        let inner = base + n;
        let threads = if n == 0 {
            self.norm_threads(&h.threads, &HashMap::new(), inner)
        } else {
            self.label(&h.temps, &h.threads, base)
        };
        let mut body = match threads.len() {
            0 => Process::Done,
            1 => threads.into_iter().next().unwrap(),
            _ => Process::Par(threads),
        };
        for i in (0..n).rev() {
            body = Process::new_scope(canonical(base + i), body);
        }
        h.pins.sort();
        for a in h.pins.into_iter().rev() {
            body = Process::new_scope(a, body);
        }
        body
    }

    fn norm_threads(&mut self, threads: &[Process], rename: &HashMap<Name, Name>, base: usize) -> Vec<Process> {
        let mut out: Vec<Process> = threads
            .iter()
            .map(|t| {
                let t = if rename.is_empty() { t.clone() } else { t.substitute_names(rename) };
                self.norm_thread(&t, base)
            })
            .collect();
        out.sort();
        out
    }

    /// Choose canonical names for the hoisted restrictions and return the
    /// renamed, normalized threads.
    fn label(&mut self, temps: &[Name], threads: &[Process], base: usize) -> Vec<Process> {
        let inner = base + temps.len();
        let star = Name::from("*");
        let at = Name::from("@");
        let mut keyed: Vec<(Vec<Process>, Name)> = Vec::new();
        for r in temps {
            let rename: HashMap<Name, Name> =
                temps.iter().map(|s| (s.clone(), if s == r { at.clone() } else { star.clone() })).collect();
            let mentioning: Vec<Process> =
                threads.iter().filter(|t| t.free_names().contains(r)).cloned().collect();
            keyed.push((self.norm_threads(&mentioning, &rename, inner), r.clone()));
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        let mut groups: Vec<Vec<Name>> = Vec::new();
        for (i, (sig, r)) in keyed.iter().enumerate() {
            if i > 0 && keyed[i - 1].0 == *sig {
                groups.last_mut().unwrap().push(r.clone());
            } else {
                groups.push(vec![r.clone()]);
            }
        }
        let total: usize = groups.iter().map(|g| (1..=g.len()).product::<usize>()).product();
        let candidates: Vec<Vec<Name>> = if total <= MAX_PERMUTATIONS {
            let mut acc: Vec<Vec<Name>> = vec![vec![]];
            for g in &groups {
                let perms = permutations(g);
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        perms.iter().map(move |p| {
                            let mut v = prefix.clone();
                            v.extend(p.iter().cloned());
                            v
                        })
                    })
                    .collect();
            }
            acc
        } else {
            vec![groups.concat()]
        };
        let mut best: Option<Vec<Process>> = None;
        for order in candidates {
            let rename: HashMap<Name, Name> =
                order.iter().enumerate().map(|(i, r)| (r.clone(), canonical(base + i))).collect();
            let threads = self.norm_threads(threads, &rename, inner);
            if best.as_ref().is_none_or(|b| threads < *b) {
                best = Some(threads);
            }
        }
        best.unwrap_or_default()
    }

    fn norm_thread(&mut self, t: &Process, base: usize) -> Process {
        match t {
            Process::Send { target, tag, args, span } => {
                Process::Send { target: target.clone(), tag: tag.clone(), args: fold_args(args), span: *span }
            }
            Process::Invoke { def, args, span } => {
                Process::Invoke { def: def.clone(), args: fold_args(args), span: *span }
            }
            Process::If { cond, then, els, span } => Process::If {
                cond: Cond { op: cond.op, lhs: cond.lhs.fold(), rhs: cond.rhs.fold() },
                then: Box::new(self.norm(then, base)),
                els: Box::new(self.norm(els, base)),
                span: *span,
            },
            Process::Guard { branches, span } => {
                let all_fail = branches.iter().all(|b| matches!(b, Branch::Fail { .. }));
                let mut out: Vec<Branch> = branches
                    .iter()
                    .filter(|b| all_fail || !matches!(b, Branch::Fail { .. }))
                    .map(|b| self.norm_branch(b, base))
                    .collect();
                out.sort();
                if all_fail {
                    out.truncate(1);
                }
                Process::Guard { branches: out, span: *span }
            }
            p => self.norm(p, base),
        }
    }

    fn norm_branch(&mut self, b: &Branch, base: usize) -> Branch {
        match b {
            Branch::Fail { .. } => b.clone(),
            Branch::Free { mailbox, body, span } => {
                Branch::Free { mailbox: mailbox.clone(), body: Box::new(self.norm(body, base)), span: *span }
            }
            Branch::Receive { mailbox, tag, binders, body, span } => {
                let rename: HashMap<Name, Name> =
                    binders.iter().enumerate().map(|(i, x)| (x.name.clone(), canonical(base + i))).collect();
                let body = body.substitute_names(&rename);
                let binders = binders
                    .iter()
                    .enumerate()
                    .map(|(i, x)| Binder { name: canonical(base + i), ty: x.ty })
                    .collect::<Vec<_>>();
                let k = binders.len();
                Branch::Receive {
                    mailbox: mailbox.clone(),
                    tag: tag.clone(),
                    binders,
                    body: Box::new(self.norm(&body, base + k)),
                    span: *span,
                }
            }
        }
    }
}

fn fold_args(args: &[Arg]) -> Vec<Arg> {
    args.iter()
        .map(|a| match a {
            Arg::Int(e) => Arg::Int(e.fold()),
            a => a.clone(),
        })
        .collect()
}

fn permutations(items: &[Name]) -> Vec<Vec<Name>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// Multiset of parallel threads below the hoisted restrictions of a
/// normal form, with the restricted names.
pub(crate) fn split_normal(p: &Process) -> (Vec<Name>, Vec<&Process>) {
    let mut names = Vec::new();
    let mut cur = p;
    while let Process::New { name, body, .. } = cur {
        names.push(name.clone());
        cur = body;
    }
    let threads = match cur {
        Process::Done => vec![],
        Process::Par(ps) => ps.iter().collect(),
        q => vec![q],
    };
    (names, threads)
}
