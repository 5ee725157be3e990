"""Kron-reduce the WSCC 3-machine 9-bus system to internal generator nodes.

Writes the scenario fixture used by the `stability` command and the
acceptance suite: pre-fault, fault-on (solid fault at bus 7) and post-fault
(line 5-7 tripped) reduced networks in the `nmd` system-definition format.

    python3 tools/ninebus_reduction.py > crates/nmd/fixtures/ninebus_fault.toml
"""
import numpy as np
from scipy.optimize import fsolve

NB = 9
LINES = [  # from, to, r, x, b
    (1, 4, 0.0, 0.0576, 0.0), (2, 7, 0.0, 0.0625, 0.0), (3, 9, 0.0, 0.0586, 0.0),
    (4, 5, 0.010, 0.085, 0.176), (4, 6, 0.017, 0.092, 0.158), (5, 7, 0.032, 0.161, 0.306),
    (6, 9, 0.039, 0.170, 0.358), (7, 8, 0.0085, 0.072, 0.149), (8, 9, 0.0119, 0.1008, 0.209),
]
XD = np.array([0.0608, 0.1198, 0.1813])
H = np.array([23.64, 6.4, 3.01])
OMEGA_S = 2 * np.pi * 60
FAULT_BUS = 7
TRIPPED = (5, 7)


def admittance(lines):
    y = np.zeros((NB, NB), complex)
    for a, b, r, x, bsh in lines:
        a -= 1
        b -= 1
        ys = 1 / complex(r, x)
        y[a, a] += ys + 0.5j * bsh
        y[b, b] += ys + 0.5j * bsh
        y[a, b] -= ys
        y[b, a] -= ys
    return y


Y = admittance(LINES)
PL = np.zeros(NB)
QL = np.zeros(NB)
PL[4], QL[4] = 1.25, 0.5
PL[5], QL[5] = 0.9, 0.3
PL[7], QL[7] = 1.0, 0.35
VG = [1.04, 1.025, 1.025]


def mismatch(v):
    th = np.concatenate([[0], v[:8]])
    vm = np.concatenate([VG, v[8:]])
    volt = vm * np.exp(1j * th)
    s = volt * np.conj(Y @ volt)
    p = -PL.copy()
    q = -QL.copy()
    p[1] += 1.63
    p[2] += 0.85
    return list((s.real - p)[1:]) + list((s.imag - q)[3:])


sol = fsolve(mismatch, np.concatenate([np.zeros(8), np.ones(6)]))
TH = np.concatenate([[0], sol[:8]])
VM = np.concatenate([VG, sol[8:]])
V = VM * np.exp(1j * TH)
S = V * np.conj(Y @ V) + PL + 1j * QL
E = V[:3] + 1j * XD * np.conj(S[:3] / V[:3])
PM = S[:3].real


def reduced(yb):
    yb = yb.copy()
    for k in (4, 5, 7):
        yb[k, k] += (PL[k] - 1j * QL[k]) / VM[k] ** 2
    yf = np.zeros((12, 12), complex)
    yf[:9, :9] = yb
    for g in range(3):
        y = 1 / (1j * XD[g])
        yf[9 + g, 9 + g] += y
        yf[g, g] += y
        yf[9 + g, g] -= y
        yf[g, 9 + g] -= y
    gi, bi = [9, 10, 11], list(range(9))
    a = yf[np.ix_(gi, gi)]
    b = yf[np.ix_(gi, bi)]
    c = yf[np.ix_(bi, gi)]
    d = yf[np.ix_(bi, bi)]
    return a - b @ np.linalg.solve(d, c)


y_fault = Y.copy()
y_fault[FAULT_BUS - 1, FAULT_BUS - 1] += 1e7
y_post = admittance([l for l in LINES if (l[0], l[1]) != TRIPPED])

EM = np.abs(E)


def fmt(x):
    return repr(float(x))


def network(name, yr):
    out = [f"[networks.{name}]"]
    out.append("g = [" + ", ".join(fmt(yr[i, i].real) for i in range(3)) + "]")
    c = [[0.0 if i == j else EM[i] * EM[j] * yr[i, j].imag for j in range(3)] for i in range(3)]
    d = [[0.0 if i == j else EM[i] * EM[j] * yr[i, j].real for j in range(3)] for i in range(3)]
    out.append("c = [" + ", ".join("[" + ", ".join(fmt(v) for v in row) + "]" for row in c) + "]")
    out.append("d = [" + ", ".join("[" + ", ".join(fmt(v) for v in row) + "]" for row in d) + "]")
    return "\n".join(out)


print("# WSCC 3-machine 9-bus system reduced to internal generator nodes.")
print(f"# Solid fault at bus {FAULT_BUS}, cleared by tripping line {TRIPPED[0]}-{TRIPPED[1]}.")
print("# Generated by tools/ninebus_reduction.py")
print(f"omega_s = {fmt(OMEGA_S)}")
print()
for i in range(3):
    print("[[machines]]")
    print(f"h = {fmt(H[i])}")
    print(f"d = {fmt(H[i])}")
    print(f"pm = {fmt(PM[i])}")
    print(f"e = {fmt(EM[i])}")
    print()
print("[initial]")
print("angles = [" + ", ".join(fmt(a) for a in np.angle(E)) + "]")
print("speeds = [0.0, 0.0, 0.0]")
print()
print(network("pre_fault", reduced(Y)))
print()
print(network("fault_on", reduced(y_fault)))
print()
print(network("post_fault", reduced(y_post)))
