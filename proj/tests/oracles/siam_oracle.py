"""Independent dense-matrix oracle for the three-site Anderson model.

Builds H by brute force on occupation tuples, takes T from the cluster
analysis of the exact ground state (full-rank CC equals FCI here), Lambda
from the exact left state, S from the cluster analysis of that bra, and the
incremental-subsystem flow energies by direct replay. Prints JSON; the
numbers are frozen in tests/support/oracle_values.hpp.

    python3 tests/oracles/siam_oracle.py
"""
import itertools
import json

import numpy as np
from scipy.linalg import expm

M = 6
UP = (1, 0, 2)   # impurity, bath1, bath2 of spin up
DN = (4, 3, 5)
REF = (1, 0, 0, 1, 1, 0)
EXC = [((0,), (1,)), ((0,), (2,)), ((3,), (5,)), ((4,), (5,)),
       ((0, 3), (1, 5)), ((0, 4), (1, 5)), ((0, 3), (2, 5)), ((0, 4), (2, 5))]


def dets(n):
    return [d for d in itertools.product([0, 1], repeat=M) if sum(d) == n]


def apply(ops, det):
    d = list(det)
    s = 1
    for p, dag in reversed(ops):
        if d[p] == dag:
            return None, 0
        s *= (-1) ** sum(d[:p])
        d[p] = dag
    return tuple(d), s


def mat(terms, frm, to):
    idx = {d: i for i, d in enumerate(to)}
    a = np.zeros((len(to), len(frm)))
    for c, ops in terms:
        for j, d in enumerate(frm):
            r, s = apply(ops, d)
            if r is not None and r in idx:
                a[idx[r], j] += c * s
    return a


def siam(ec, u, ed=(-1.0, 1.0), v=(1.0, 1.0)):
    t = []
    for s in (UP[0], DN[0]):
        t.append((ec, [(s, 1), (s, 0)]))
    t.append((u, [(UP[0], 1), (UP[0], 0), (DN[0], 1), (DN[0], 0)]))
    for i in range(2):
        for P in (UP, DN):
            t.append((ed[i], [(P[1 + i], 1), (P[1 + i], 0)]))
            t.append((v[i], [(P[0], 1), (P[1 + i], 0)]))
            t.append((v[i], [(P[1 + i], 1), (P[0], 0)]))
    return t


def eop(h, p):
    return [(a, 1) for a in p] + [(i, 0) for i in reversed(h)]


S3 = dets(3)
IDX = {d: i for i, d in enumerate(S3)}
PHI = np.zeros(len(S3))
PHI[IDX[REF]] = 1.0
EVEC = []
for e in EXC:
    r, s = apply(eop(*e), REF)
    v = np.zeros(len(S3))
    v[IDX[r]] = s
    EVEC.append(v)
EVEC = np.array(EVEC)


def tmat(a):
    return sum((mat([(x, eop(*e))], S3, S3) for e, x in zip(EXC, a)), np.zeros((len(S3),) * 2))


def cluster(c, which=range(8)):
    """Amplitudes with <Phi_mu|e^T|Phi> = c_mu, singles then doubles."""
    a = np.zeros(8)
    for k in (1, 2):
        v = expm(tmat(a)) @ PHI
        for n, e in enumerate(EXC):
            if len(e[0]) == k and n in which:
                a[n] = (c - v) @ EVEC[n]
    return a


def ground(h3):
    # ground state restricted to the reference's spin sector
    nup = sum(REF[p] for p in UP)
    sec = [i for i, d in enumerate(S3) if sum(d[p] for p in UP) == nup]
    w, v = np.linalg.eigh(h3[np.ix_(sec, sec)])
    psi = np.zeros(len(S3))
    psi[sec] = v[:, 0]
    return w[0], psi


def amplitudes(u, ec):
    h3 = mat(siam(ec, u), S3, S3)
    e0, psi = ground(h3)
    t = cluster(psi / psi[IDX[REF]])
    bra = expm(tmat(t)).T @ psi          # <Psi| e^T
    bra = bra / bra[IDX[REF]]
    lam = EVEC @ bra
    # <Phi|e^S = <Phi|(1+Lambda): same cluster algebra on the transposed side
    s = cluster(PHI + lam @ EVEC)
    return h3, e0, t, lam, s


def heff_bar(h3, t):
    text = t.copy()
    text[0] = 0.0
    hb = expm(-tmat(text)) @ h3 @ expm(tmat(text))
    p = [IDX[REF], int(np.argmax(np.abs(EVEC[0])))]
    sgn = np.array([1.0, EVEC[0][p[1]]])
    return (hb[np.ix_(p, p)] * np.outer(sgn, sgn))


def flow(h3, subs, maxit=500):
    cov = sorted(set(sum(subs, [])))
    t = np.zeros(8)
    for _ in range(maxit):
        props = {}
        es = []
        for idx_int in subs:
            text = t.copy()
            text[idx_int] = 0
            hbe = expm(-tmat(text)) @ h3 @ expm(tmat(text))
            p = [IDX[REF]] + [int(np.argmax(np.abs(EVEC[n]))) for n in idx_int]
            w, v = np.linalg.eig(hbe[np.ix_(p, p)])
            k = np.argmin(w.real)
            es.append(w[k].real)
            c = np.zeros(len(S3))
            c[p] = v[:, k].real / v[0, k].real
            a = cluster(c, which=idx_int)
            for n in idx_int:
                props.setdefault(n, []).append(a[n])
        tn = t.copy()
        for n, vals in props.items():
            tn[n] = np.mean(vals)
        hb = expm(-tmat(tn)) @ h3 @ expm(tmat(tn))
        r = EVEC @ hb @ PHI
        d = np.diag(EVEC @ hb @ EVEC.T) - PHI @ hb @ PHI
        for n in cov:
            tn[n] -= r[n] / d[n]
        dt = np.abs(tn - t).max()
        t = tn
        if max(es) - min(es) < 1e-11 and dt < 1e-11:
            break
    hb = expm(-tmat(t)) @ h3 @ expm(tmat(t))
    return PHI @ hb @ PHI


def main():
    out = {}
    h3, e0, t, lam, s = amplitudes(1.0, -0.5)
    out["paper"] = {"E0": e0, "t": t.tolist(), "lambda": lam.tolist(), "s": s.tolist(),
                    "heff_bar": heff_bar(h3, t).tolist(),
                    "signatures": [f"{','.join(map(str, h))}->{','.join(map(str, p))}" for h, p in EXC]}
    subs = [[0], [0, 2, 4], [1, 2, 6], [0, 3, 5], [1, 3, 7]]
    out["fig4"] = []
    for u in (0.5, 1.0, 2.0, 4.0):
        h3, e0, *_ = amplitudes(u, -u / 2)
        _, psi = ground(h3)
        docc = psi @ mat([(1.0, [(UP[0], 1), (UP[0], 0), (DN[0], 1), (DN[0], 0)])], S3, S3) @ psi
        out["fig4"].append({"U": u, "E_exact": e0, "docc_exact": docc,
                            "flow": [flow(h3, subs[:n + 1]) for n in range(len(subs))]})
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
