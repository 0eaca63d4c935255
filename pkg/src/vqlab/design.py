"""Constraint-randomized session design.

Playlists are built in four stages: an initial shuffle that avoids long
same-content runs, a partition into 30 contiguous video groups, a
round-robin assignment of 10 groups to each of a participant's three
sessions, and a final per-session shuffle of the group members plus the
hidden references under a minimum same-content spacing constraint.

Every randomized step is a deterministic function of its seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import DesignInfeasibleError

GROUP_COUNT = 30
SESSIONS = 3
GROUPS_PER_SESSION = GROUP_COUNT // SESSIONS
MAX_CONTENT_RUN = 10        # initial shuffle: forbid runs of >= 10 same-content items
MIN_CONTENT_GAP = 4         # final shuffle: same-content items >= 4 positions apart
MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class VideoGroup:
    index: int
    members: tuple[str, ...]


@dataclass(frozen=True)
class SessionAssignment:
    participant: int
    session: int
    groups: tuple[int, ...]


@dataclass(frozen=True)
class Playlist:
    participant: int
    session: int
    seed: int
    items: tuple[str, ...]

    def to_json(self, media_paths: dict[str, str] | None = None) -> dict:
        media_paths = media_paths or {}
        return {
            "participant": self.participant,
            "session": self.session,
            "seed": self.seed,
            "items": [
                {"stimulus_id": sid, "media_path": media_paths.get(sid)}
                for sid in self.items
            ],
        }


def _max_run(contents: list[str]) -> int:
    best = run = 1
    for prev, cur in zip(contents, contents[1:]):
        run = run + 1 if cur == prev else 1
        best = max(best, run)
    return best


def partition_groups(
    stimuli: list[tuple[str, str]],
    seed: int,
    group_count: int = GROUP_COUNT,
) -> list[VideoGroup]:
    """Shuffle (stimulus_id, content) pairs and slice into contiguous groups.

    The shuffle is retried until no content appears in a run of
    ``MAX_CONTENT_RUN`` or more consecutive items. Group sizes differ by at
    most one, larger groups first.
    """
    if len(stimuli) < group_count:
        raise DesignInfeasibleError(
            f"cannot split {len(stimuli)} stimuli into {group_count} groups"
        )
    rng = random.Random(seed)
    order = list(stimuli)
    for _ in range(MAX_ATTEMPTS):
        rng.shuffle(order)
        if _max_run([content for _, content in order]) < MAX_CONTENT_RUN:
            break
    else:
        raise DesignInfeasibleError(
            f"no shuffle without a same-content run of {MAX_CONTENT_RUN}+ "
            f"found in {MAX_ATTEMPTS} attempts"
        )
    n = len(order)
    base, extra = divmod(n, group_count)
    groups = []
    pos = 0
    for g in range(group_count):
        # spread the one-larger groups evenly so any 10 consecutive groups
        # (the round-robin session windows) sum to within one item of n/3
        large = ((g + 1) * extra) // group_count > (g * extra) // group_count
        size = base + (1 if large else 0)
        members = tuple(sid for sid, _ in order[pos : pos + size])
        groups.append(VideoGroup(index=g, members=members))
        pos += size
    return groups


def round_robin_assign(participant: int, group_count: int = GROUP_COUNT) -> list[SessionAssignment]:
    """Three session assignments for a participant, rotating by participant index.

    Session k of participant p receives groups
    ``{(p-1 + GROUPS_PER_SESSION*(k-1) + j) mod group_count : j = 0..9}``,
    which covers all groups exactly once per participant and balances group
    occurrence across session indices over any 30 consecutive participants.
    """
    if participant < 1:
        raise ValueError("participants are numbered from 1")
    per_session = group_count // SESSIONS
    out = []
    for k in range(1, SESSIONS + 1):
        start = (participant - 1) + per_session * (k - 1)
        groups = tuple((start + j) % group_count for j in range(per_session))
        out.append(SessionAssignment(participant=participant, session=k, groups=groups))
    return out


def _constrained_order(
    items: list[str],
    content_of: dict[str, str],
    rng: random.Random,
    min_gap: int,
) -> list[str] | None:
    """One randomized greedy attempt: draw uniformly among items whose
    content has not appeared in the last ``min_gap - 1`` positions."""
    remaining = list(items)
    rng.shuffle(remaining)
    recent: list[str] = []
    out: list[str] = []
    while remaining:
        eligible = [i for i, sid in enumerate(remaining) if content_of[sid] not in recent]
        if not eligible:
            return None
        pick = eligible[rng.randrange(len(eligible))]
        sid = remaining.pop(pick)
        out.append(sid)
        recent.append(content_of[sid])
        if len(recent) >= min_gap:
            recent.pop(0)
    return out


def assemble_session_playlist(
    assignment: SessionAssignment,
    groups: list[VideoGroup],
    references: list[str],
    content_of: dict[str, str],
    seed: int,
    min_gap: int = MIN_CONTENT_GAP,
) -> Playlist:
    """Merge the assigned groups with the hidden references and order them
    so same-content items sit at least ``min_gap`` positions apart.

    A plain reject-and-reshuffle loop is hopeless at study scale (every raw
    shuffle of ~160 items with ~15 contents almost surely violates the
    spacing), so each attempt is a randomized greedy placement; attempts are
    bounded and the whole procedure is deterministic in the seed.
    """
    by_index = {g.index: g for g in groups}
    pool: list[str] = []
    for gi in assignment.groups:
        pool.extend(by_index[gi].members)
    pool.extend(references)
    missing = [sid for sid in pool if sid not in content_of]
    if missing:
        raise DesignInfeasibleError(f"stimuli without content labels: {missing[:5]}")
    rng = random.Random(seed)
    for _ in range(MAX_ATTEMPTS):
        ordered = _constrained_order(pool, content_of, rng, min_gap)
        if ordered is not None:
            return Playlist(
                participant=assignment.participant,
                session=assignment.session,
                seed=seed,
                items=tuple(ordered),
            )
    counts: dict[str, int] = {}
    for sid in pool:
        counts[content_of[sid]] = counts.get(content_of[sid], 0) + 1
    worst = max(counts, key=counts.get)
    raise DesignInfeasibleError(
        f"no ordering with same-content gap >= {min_gap} found in "
        f"{MAX_ATTEMPTS} attempts; most frequent content {worst!r} "
        f"({counts[worst]} of {len(pool)} items)"
    )


def gap_violations(items, content_of: dict[str, str], min_gap: int = MIN_CONTENT_GAP) -> list[tuple[int, int]]:
    """Positions of same-content pairs closer than ``min_gap``; empty when valid."""
    last_seen: dict[str, int] = {}
    bad = []
    for pos, sid in enumerate(items):
        c = content_of[sid]
        if c in last_seen and pos - last_seen[c] < min_gap:
            bad.append((last_seen[c], pos))
        last_seen[c] = pos
    return bad


def build_study_playlists(
    stimuli: list[tuple[str, str]],
    references: list[tuple[str, str]],
    participants: int,
    seed: int,
) -> tuple[list[VideoGroup], dict[tuple[int, int], Playlist]]:
    """Groups plus one playlist per (participant, session) for a whole study."""
    groups = partition_groups(stimuli, seed)
    content_of = {sid: c for sid, c in stimuli}
    content_of.update({sid: c for sid, c in references})
    ref_ids = [sid for sid, _ in references]
    playlists: dict[tuple[int, int], Playlist] = {}
    for p in range(1, participants + 1):
        for assignment in round_robin_assign(p):
            session_seed = seed * 1_000_003 + p * 101 + assignment.session
            playlists[(p, assignment.session)] = assemble_session_playlist(
                assignment, groups, ref_ids, content_of, session_seed
            )
    return groups, playlists
