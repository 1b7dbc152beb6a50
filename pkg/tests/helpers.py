"""Random tree generators and brute-force oracles shared by the test modules.

The oracles here deliberately avoid the package's own traversal code: they
work from raw head vectors and enumerate permutations directly.
"""

from __future__ import annotations

import itertools
import random
from collections import Counter

from udreorder.conllu import MultiwordToken, Sentence, Token
from udreorder.constraints import ConstraintSet, derive_constraints
from udreorder.pods import PodTable

LABELS6 = ["nsubj", "obj", "obl", "advmod", "det", "case"]


def make_sentence(heads, labels, forms=None, comments=(), mwts=()) -> Sentence:
    """``heads[i]`` / ``labels[i]`` describe token ``i + 1``; a head of 0 gets label ``root``."""
    n = len(heads)
    forms = forms or [f"w{i}" for i in range(1, n + 1)]
    tokens = tuple(
        Token(i, forms[i - 1], forms[i - 1].lower(), "X", "_", "_", h,
              "root" if h == 0 else labels[i - 1], "_", "_")
        for i, h in enumerate(heads, 1)
    )
    return Sentence(tokens, tuple(comments), tuple(MultiwordToken(*m) for m in mwts))


def random_projective_heads(rng: random.Random, n: int) -> list[int]:
    heads = [0] * (n + 1)

    def build(lo, hi, parent):
        # nodes lo..hi form one subtree attached to ``parent``
        root = rng.randint(lo, hi)
        heads[root] = parent
        for a, b in ((lo, root - 1), (root + 1, hi)):
            start = a
            while start <= b:
                end = rng.randint(start, b)
                build(start, end, root)
                start = end + 1

    build(1, n, 0)
    return heads[1:]


def random_heads(rng: random.Random, n: int) -> list[int]:
    """Any single-rooted tree, typically non-projective."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = [0] * (n + 1)
    for k, node in enumerate(order):
        heads[node] = 0 if k == 0 else order[rng.randrange(k)]
    return heads[1:]


def random_sentence(rng: random.Random, n: int, labels=LABELS6, projective=None) -> Sentence:
    if projective is None:
        projective = rng.random() < 0.5
    heads = random_projective_heads(rng, n) if projective else random_heads(rng, n)
    return make_sentence(heads, [rng.choice(labels) for _ in range(n)])


def random_table(rng: random.Random, labels=LABELS6, density=0.6, max_count=20) -> PodTable:
    parents = ["root", *labels]
    counts = {}
    for k in parents:
        for i in [k, *labels]:
            for j in [k, *labels]:
                if i != j and rng.random() < density:
                    counts[(k, i, j)] = rng.randint(0, max_count)
    return PodTable("xx", "universal", counts)


def random_constraints(rng: random.Random, labels=LABELS6) -> ConstraintSet:
    return derive_constraints(random_table(rng, labels), margin=rng.choice([0.0, 0.0, 0.1]))


# --- oracles -----------------------------------------------------------------


def oracle_pod_counts(heads, deprels) -> Counter:
    """Count ordered label pairs by brute force straight from the head vector."""
    n = len(heads)
    counts = Counter()
    for p in range(1, n + 1):
        kids = [c for c in range(1, n + 1) if heads[c - 1] == p]
        if not kids:
            continue
        members = sorted(kids + [p])
        for x, y in itertools.combinations(members, 2):
            counts[(deprels[p - 1], deprels[x - 1], deprels[y - 1])] += 1
    return counts


def oracle_is_tree(heads) -> bool:
    n = len(heads)
    if sum(1 for h in heads if h == 0) != 1:
        return False
    for start in range(1, n + 1):
        seen = set()
        x = start
        while x != 0:
            if x in seen:
                return False
            seen.add(x)
            x = heads[x - 1]
    return True


def oracle_closure(heads, node) -> set[int]:
    out = {node}
    changed = True
    while changed:
        changed = False
        for i, h in enumerate(heads, 1):
            if h in out and i not in out:
                out.add(i)
                changed = True
    return out


def oracle_feasible(labels, constraints) -> bool:
    """Is there any ordering of ``labels`` (a list) putting each i before each j?"""
    for perm in itertools.permutations(range(len(labels))):
        pos = {}
        for rank, idx in enumerate(perm):
            pos.setdefault(labels[idx], []).append(rank)
        if all(max(pos[i]) < min(pos[j]) for i, j in constraints if i in pos and j in pos):
            return True
    return False


def oracle_label_feasible(labels, constraints) -> bool:
    """Feasibility over distinct labels only; equivalent to ``oracle_feasible`` and cheaper."""
    return oracle_feasible(sorted(set(labels)), constraints)


# --- reorder invariant checker ----------------------------------------------


def random_spans(rng: random.Random, n: int, max_spans=2):
    from udreorder.reorder import LockedSpan

    spans = []
    pos = 1
    for _ in range(rng.randint(0, max_spans)):
        start = rng.randint(pos, n + 1)
        if start > n:
            break
        end = min(n, start + rng.randint(0, 2))
        spans.append(LockedSpan(start, end, rng.choice(["user", "entity"])))
        pos = end + 1
    return spans


def check_reorder(sentence, cs, spans=()):
    """Reorder ``sentence`` and assert every output invariant; returns the result.

    Outcome checks are recomputed from raw label lists with the brute-force
    feasibility oracle, not read back from the reorderer's own diagnostics.
    """
    from udreorder.conllu import build_tree
    from udreorder.pods import normalize_label
    from udreorder.reorder import LockedSpan, _mwt_spans, lock_spans, reorder_tree

    tree = build_tree(sentence)
    result = reorder_tree(tree, cs, spans)
    n = len(sentence)
    align = result.alignment
    pos = {o: align[o - 1] for o in range(1, n + 1)}

    # permutation validity
    assert sorted(align) == list(range(1, n + 1))
    new = result.sentence
    assert [t.id for t in new.tokens] == list(range(1, n + 1))

    # structure preservation, token multiset
    for o, tok in enumerate(sentence.tokens, 1):
        nt = new.tokens[pos[o] - 1]
        assert (nt.form, nt.lemma, nt.upos, nt.xpos, nt.feats, nt.deprel, nt.deps, nt.misc) == (
            tok.form, tok.lemma, tok.upos, tok.xpos, tok.feats, tok.deprel, tok.deps, tok.misc)
        assert nt.head == (pos[tok.head] if tok.head else 0)

    all_spans = list(spans) + _mwt_spans(sentence, spans)
    locked = lock_spans(tree, all_spans)
    lin_heads = [locked.parents[i] for i in range(1, n + 1)]

    # contiguity of every linearization subtree (= every input subtree when nothing is locked)
    if not all_spans:
        assert lin_heads == [t.head for t in sentence.tokens]
    # (inside a frozen block the original order, crossing arcs included, is kept as is)
    closures = {x: oracle_closure(lin_heads, x) for x in range(1, n + 1)}
    frozen = set()
    for a in locked.atomic:
        frozen |= closures[a] - {a}
        members = sorted(closures[a])
        assert [pos[d] for d in members] == sorted(pos[d] for d in members)
    for x, clo in closures.items():
        if x in frozen:
            continue
        image = sorted(pos[d] for d in clo)
        assert image[-1] - image[0] + 1 == len(image), f"subtree of {x} scattered"

    # locked spans contiguous and internally ordered
    for s in all_spans:
        image = [pos[o] for o in range(s.start, s.end + 1)]
        assert image == list(range(image[0], image[0] + len(image)))

    # per-subtree outcomes against the brute-force feasibility oracle
    g = cs.granularity
    label = {i: normalize_label(t.deprel, g) for i, t in enumerate(sentence.tokens, 1)}
    for node in range(1, n + 1):
        kids = [c for c in range(1, n + 1) if lin_heads[c - 1] == node]
        if not kids or node in frozen or node in locked.atomic:
            continue
        plabel = label[node]
        blocks = sorted(kids + [node])
        blabel = {b: plabel if b == node else label[b] for b in blocks}
        present = set(blabel.values())
        active = [(i, j) for k, i, j in cs.entries if k == plabel and i in present and j in present]
        out_pos = {b: pos[b] if b == node else min(pos[d] for d in closures[b]) for b in blocks}
        if oracle_label_feasible(list(blabel.values()), active):
            for a in blocks:
                for b in blocks:
                    if (blabel[a], blabel[b]) in active:
                        assert out_pos[a] < out_pos[b]
        else:
            assert sorted(blocks, key=out_pos.get) == blocks, "infeasible subtree not reverted"

    # idempotence
    again_spans = [LockedSpan(pos[s.start], pos[s.end], s.reason) for s in spans]
    again = reorder_tree(build_tree(new), cs, again_spans)
    assert again.sentence == new
    assert list(again.alignment) == list(range(1, n + 1))
    return result


UD_LABELS = ["nsubj", "obj", "iobj", "obl", "advmod", "amod", "det", "case", "nmod", "nmod:poss",
             "mark", "advcl", "acl", "aux", "cop", "punct", "conj", "cc", "compound", "xcomp"]


def synthetic_sentences(n_sentences: int, seed: int = 0, max_len: int = 25, projective_share: float = 0.9):
    """Random sentences with sent_id and text comments; the rest of ``projective_share`` may cross arcs."""
    rng = random.Random(seed)
    for k in range(1, n_sentences + 1):
        n = rng.randint(3, max_len)
        heads = random_projective_heads(rng, n) if rng.random() < projective_share else random_heads(rng, n)
        forms = [f"w{rng.randrange(500)}" for _ in range(n)]
        yield make_sentence(heads, [rng.choice(UD_LABELS) for _ in range(n)], forms,
                            comments=(f"# sent_id = syn-{k}", f"# text = {' '.join(forms)}"))


def write_treebank(path, sentences) -> None:
    from udreorder.conllu import serialize_conllu

    with open(path, "w", encoding="utf-8", newline="") as f:
        for s in sentences:
            f.write(serialize_conllu(s))
