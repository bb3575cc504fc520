"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's code paths: statistics come from the
direct pair-count definitions, p-values from exhaustive permutation
enumeration, routines from literal span-containment checks, and matcher
verdicts from a replay-from-scratch reconstruction of the pending cache.
"""

from __future__ import annotations

from itertools import combinations, permutations


# --- statistics ---------------------------------------------------------------

def u_direct(x, y) -> float:
    """U by pair counting: #{x_i > y_j} + 0.5 * #{x_i = y_j}."""
    gt = sum(1 for a in x for b in y if a > b)
    eq = sum(1 for a in x for b in y if a == b)
    return gt + 0.5 * eq


def delta_direct(x, y) -> float:
    gt = sum(1 for a in x for b in y if a > b)
    lt = sum(1 for a in x for b in y if a < b)
    return (gt - lt) / (len(x) * len(y))


def rho_direct(x, y) -> float:
    """Spearman rho as Pearson correlation of average ranks."""

    def avg_ranks(values):
        order = sorted(range(len(values)), key=lambda i: values[i])
        ranks = [0.0] * len(values)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
                j += 1
            mean_rank = (i + j) / 2 + 1
            for k in range(i, j + 1):
                ranks[order[k]] = mean_rank
            i = j + 1
        return ranks

    rx, ry = avg_ranks(list(x)), avg_ranks(list(y))
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = (sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry)) ** 0.5
    return num / den


def h_direct(groups) -> float:
    """Kruskal-Wallis H with average ranks and tie correction.

    Returns 0.0 for all-identical pooled data (the tie factor vanishes).
    """
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    order = sorted(range(n), key=lambda i: pooled[i])
    ranks = [0.0] * n
    i = 0
    tie_term = 0
    while i < n:
        j = i
        while j + 1 < n and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        size = j - i + 1
        tie_term += size**3 - size
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    h = 0.0
    start = 0
    for g in groups:
        r = sum(ranks[start:start + len(g)])
        h += r * r / len(g)
        start += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    correction = 1.0 - tie_term / (n**3 - n)
    if correction == 0.0:
        return 0.0
    return h / correction


def exact_mwu_p(x, y, convention: str = "ordinary") -> float:
    """Two-sided permutation p for U, by |U - mn/2| deviation.

    convention="ordinary" counts P(dev >= obs); "mid" counts
    P(dev > obs) + 0.5 * P(dev = obs), the exhaustive counterpart of the
    normal approximation without continuity correction.
    """
    pooled = list(x) + list(y)
    m = len(x)
    center = m * len(y) / 2.0
    observed = abs(u_direct(x, y) - center)
    over = equal = total = 0
    indices = range(len(pooled))
    for chosen in combinations(indices, m):
        chosen_set = set(chosen)
        xs = [pooled[i] for i in chosen]
        ys = [pooled[i] for i in indices if i not in chosen_set]
        deviation = abs(u_direct(xs, ys) - center)
        if deviation > observed + 1e-12:
            over += 1
        elif deviation >= observed - 1e-12:
            equal += 1
        total += 1
    if convention == "mid":
        return (over + 0.5 * equal) / total
    return (over + equal) / total


def exact_kw_p(groups, convention: str = "ordinary") -> float:
    """Permutation p for H over all labeled group assignments."""
    pooled = [v for g in groups for v in g]
    sizes = [len(g) for g in groups]
    observed = h_direct(groups)
    counts = [0, 0, 0]  # over, equal, total

    def assign(remaining_indices, remaining_sizes, acc):
        if not remaining_sizes:
            relabeled = [[pooled[i] for i in block] for block in acc]
            h = h_direct(relabeled)
            if h > observed + 1e-12:
                counts[0] += 1
            elif h >= observed - 1e-12:
                counts[1] += 1
            counts[2] += 1
            return
        size = remaining_sizes[0]
        for block in combinations(remaining_indices, size):
            taken = set(block)
            left = [i for i in remaining_indices if i not in taken]
            assign(left, remaining_sizes[1:], acc + [block])

    assign(list(range(len(pooled))), sizes, [])
    if convention == "mid":
        return (counts[0] + 0.5 * counts[1]) / counts[2]
    return (counts[0] + counts[1]) / counts[2]


def exact_spearman_p(x, y, convention: str = "ordinary") -> float:
    """Two-sided permutation p for rho over all orderings of y."""
    observed = abs(rho_direct(x, y))
    over = equal = total = 0
    y = list(y)
    for perm in permutations(range(len(y))):
        r = abs(rho_direct(x, [y[i] for i in perm]))
        if r > observed + 1e-12:
            over += 1
        elif r >= observed - 1e-12:
            equal += 1
        total += 1
    if convention == "mid":
        return (over + 0.5 * equal) / total
    return (over + equal) / total


# --- routines -----------------------------------------------------------------

def oracle_routines(utterances):
    """Literal shared-subsequence enumeration with span-containment freeness.

    Returns {expression: (initiator, priming (ui, pos), establishment
    (ui, pos), occurrences [(ui, pos, speaker, free)])} with pos local to
    the utterance. Containment is checked directly against every longer
    shared expression's occurrence spans.
    """
    human = [(i, u) for i, u in enumerate(utterances) if u.is_human]
    speakers = {u.speaker for _, u in human if u.tokens}
    if len(speakers) < 2:
        return {}

    spans = {}  # gram -> [(ui, start)]
    produced = {}
    for ui, utt in human:
        toks = utt.tokens
        for a in range(len(toks)):
            for b in range(a + 1, len(toks) + 1):
                gram = toks[a:b]
                spans.setdefault(gram, []).append((ui, a))
                produced.setdefault(gram, set()).add(utt.speaker)

    shared = {g for g, who in produced.items() if len(who) >= 2}

    result = {}
    for gram in shared:
        size = len(gram)
        occs = []
        for ui, start in spans[gram]:
            contained = False
            for other in shared:
                if len(other) <= size:
                    continue
                for uj, s2 in spans[other]:
                    if uj == ui and s2 <= start and s2 + len(other) >= start + size:
                        contained = True
                        break
                if contained:
                    break
            occs.append((ui, start, utterances[ui].speaker, not contained))
        if not any(free for *_, free in occs):
            continue
        first_ui, first_start, initiator, _ = occs[0]
        estab = next((ui, s) for ui, s, spk, _ in occs if spk != initiator)
        result[gram] = (initiator, (first_ui, first_start), estab, occs)
    return result


# --- matcher ------------------------------------------------------------------

def oracle_verdicts(stream, network, clear_on_verdict=False):
    """Replay the cache rules from scratch before every edit.

    Returns [(verdict, actor, instruction or None)] with instructions as
    (verb, u, v, agent) tuples, one per edit action in stream order.
    """
    from align.instructions import recognise_instructions

    id_to_name = {n.id: n.name.lower() for n in network.nodes}

    def check(instr, action):
        verb, u, v, _ = instr
        action_verb = "Add" if action.verb == "adds" else "Remove"
        if verb != action_verb:
            return False
        a, b = (id_to_name[action.edge[0]], id_to_name[action.edge[1]])
        if v is None:
            return u in (a, b)
        return {u, v} <= {a, b}

    verdicts = []
    for k, action in enumerate(stream):
        if action.verb == "says":
            continue
        # rebuild pending from scratch over stream[:k]
        pending = []
        turn, attempt = 1, 1
        for prior in stream[:k]:
            if prior.turn > turn or prior.attempt > attempt:
                pending = []
                turn, attempt = prior.turn, prior.attempt
            if prior.verb == "says":
                if prior.subject is not None:
                    for ins in recognise_instructions(prior.utterance.tokens, network.node_names):
                        pending.append((ins.verb, ins.u, ins.v, prior.subject))
            else:
                others = [p for p in pending if p[3] != prior.subject]
                if others:
                    if clear_on_verdict:
                        pending = []
                    else:
                        pending = [p for p in pending if not check(p, prior)]

        if action.turn > turn or action.attempt > attempt:
            pending = []
        others = [p for p in pending if p[3] != action.subject]
        if not others:
            verdicts.append(("Nonmatch", action.subject, None))
        else:
            matched = None
            for p in others:
                if check(p, action):
                    matched = p
            if matched is not None:
                verdicts.append(("Match", action.subject, matched))
            else:
                verdicts.append(("Mismatch", action.subject, others[-1]))
    return verdicts
