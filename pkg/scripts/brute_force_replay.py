"""Independent replay of the eight-vertex walkthrough.

Restates the recording and replay rules directly on the token listings, with
no simulator code, and prints the issued/useful counts for the second pass.
The test suite pins these numbers.

Rules restated:
  * a window opens at each V access; its trigger is (previous V, this V), or
    just (this V) for the first one
  * flagged non-V accesses in a window are that window's misses (no repeats)
  * second pass: an entry becomes visible once the frontier scan reaches its
    latest trigger vertex
  * at each V access, every visible entry sharing a vertex with the current
    trigger fires; full-pair matches first, then recording order
  * a prefetched block is held until a flagged access uses it; re-issuing a
    held block is a no-op
"""

import sys

FIRST = ("V1 N2* P2* N3 P3* V2 N1 P1* N3 P3* V3 N4* P4* N5* P5* N6* P6* "
         "V4 N3 P3* V5 N3 P3 V6 N3* P3 V7 N5* P5").split()
SECOND = "V1 N2 P2 N3 P3 V4 N3 P3 V6 N3 P3 V7 N5 P5".split()  # all misses


def record(tokens):
    entries = []
    prev = None
    trigger, misses = None, []
    for t in tokens:
        name = t.rstrip("*")
        if name[0] == "V":
            if misses:
                entries.append((trigger, misses))
            trigger = (prev, name) if prev else (name,)
            prev = name
            misses = []
        elif t.endswith("*") and name not in misses:
            misses.append(name)
    if misses:
        entries.append((trigger, misses))
    return entries


def replay(entries, tokens):
    held = set()
    issued = useful = 0
    prev = None
    for t in tokens:
        if t[0] == "V":
            v = int(t[1:])
            cur = (prev, t) if prev else (t,)
            prev = t
            visible = [e for e in entries if int(e[0][-1][1:]) <= v]
            hits = [e for e in visible if set(e[0]) & set(cur)]
            hits.sort(key=lambda e: (e[0] != cur, entries.index(e)))
            seen = []
            for _, misses in hits:
                for m in misses:
                    if m not in seen:
                        seen.append(m)
            for m in seen:
                if m not in held:
                    held.add(m)
                    issued += 1
        # every second-pass access is a miss, including V itself
        if t in held:
            held.discard(t)
            useful += 1
    return issued, useful


def main():
    entries = record(FIRST)
    for trig, misses in entries:
        print(",".join(trig), "->", " ".join(misses))
    issued, useful = replay(entries, SECOND)
    misses = len(SECOND)
    print(f"issued={issued} useful={useful} baseline_misses={misses}")
    print(f"accuracy={useful / issued:.4f} coverage={useful / misses:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
