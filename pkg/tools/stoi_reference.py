"""Naive reference implementation of the STOI intelligibility measure.

Deliberately written as a straight, loop-heavy transcription of the published
algorithm (Taal et al., 2011, as circulated in the original MATLAB release):
no vectorization tricks, no sharing of code with the installable package.
Test fixtures freeze this module's output so the package implementation is
checked against an independently authored oracle.

Only 10 kHz input is accepted; fixture material is generated at that rate so
no resampler is involved on the oracle side.
"""

from __future__ import annotations

import math

import numpy as np

FS = 10000
FRAME_LEN = 256
HOP = 128
NFFT = 512
NUM_BANDS = 15
MIN_FREQ = 150.0
SEG_LEN = 30
DYN_RANGE = 40.0
BETA = -15.0
EPS = float(np.finfo(np.float64).eps)


def matlab_hanning(n):
    # hanning(n) in MATLAB drops the zero endpoints of the symmetric window
    return [0.5 * (1.0 - math.cos(2.0 * math.pi * (k + 1) / (n + 1))) for k in range(n)]


def remove_silent_frames(x, y):
    w = matlab_hanning(FRAME_LEN)
    starts = list(range(0, len(x) - FRAME_LEN, HOP))
    x_frames = []
    y_frames = []
    energies = []
    for s in starts:
        xf = [w[k] * x[s + k] for k in range(FRAME_LEN)]
        yf = [w[k] * y[s + k] for k in range(FRAME_LEN)]
        x_frames.append(xf)
        y_frames.append(yf)
        energies.append(20.0 * math.log10(math.sqrt(sum(v * v for v in xf)) + EPS))
    peak = max(energies)
    kept = [i for i, e in enumerate(energies) if e > peak - DYN_RANGE]
    n_out = (len(kept) - 1) * HOP + FRAME_LEN
    x_sil = [0.0] * n_out
    y_sil = [0.0] * n_out
    for j, i in enumerate(kept):
        for k in range(FRAME_LEN):
            x_sil[j * HOP + k] += x_frames[i][k]
            y_sil[j * HOP + k] += y_frames[i][k]
    return x_sil, y_sil


def stft(x):
    w = matlab_hanning(FRAME_LEN)
    spec = []
    for s in range(0, len(x) - FRAME_LEN, HOP):
        frame = np.array([w[k] * x[s + k] for k in range(FRAME_LEN)])
        spec.append(np.fft.rfft(frame, n=NFFT))
    return spec  # list of frames, each NFFT/2 + 1 bins


def third_octave_matrix():
    f = [FS * i / NFFT for i in range(NFFT // 2 + 1)]
    rows = []
    for band in range(NUM_BANDS):
        cf = MIN_FREQ * 2.0 ** (band / 3.0)
        lo_hz = MIN_FREQ * 2.0 ** ((2 * band - 1) / 6.0)
        hi_hz = MIN_FREQ * 2.0 ** ((2 * band + 1) / 6.0)
        lo = min(range(len(f)), key=lambda i: (f[i] - lo_hz) ** 2)
        hi = min(range(len(f)), key=lambda i: (f[i] - hi_hz) ** 2)
        row = [0.0] * len(f)
        for i in range(lo, hi):
            row[i] = 1.0
        rows.append(row)
    return rows


def band_envelopes(spec, obm):
    n_frames = len(spec)
    env = [[0.0] * n_frames for _ in range(NUM_BANDS)]
    for t, frame in enumerate(spec):
        mag2 = [abs(v) ** 2 for v in frame]
        for b in range(NUM_BANDS):
            acc = 0.0
            for i, g in enumerate(obm[b]):
                if g:
                    acc += mag2[i]
            env[b][t] = math.sqrt(acc)
    return env


def _norm(v):
    return math.sqrt(sum(x * x for x in v))


def stoi(x, y, fs):
    """Intelligibility score for degraded signal y against clean x."""
    if fs != FS:
        raise ValueError(f"reference oracle only accepts {FS} Hz input")
    if len(x) != len(y):
        raise ValueError("signals must be the same length")
    x = [float(v) for v in x]
    y = [float(v) for v in y]

    x, y = remove_silent_frames(x, y)
    x_env = band_envelopes(stft(x), third_octave_matrix())
    y_env = band_envelopes(stft(y), third_octave_matrix())
    n_frames = len(x_env[0])
    if n_frames < SEG_LEN:
        raise ValueError("too few frames after silence removal")

    clip = 10.0 ** (-BETA / 20.0)
    total = 0.0
    count = 0
    for m in range(SEG_LEN, n_frames + 1):
        for b in range(NUM_BANDS):
            xs = x_env[b][m - SEG_LEN:m]
            ys = y_env[b][m - SEG_LEN:m]
            alpha = _norm(xs) / (_norm(ys) + EPS)
            yp = [min(alpha * ys[k], xs[k] * (1.0 + clip)) for k in range(SEG_LEN)]
            xm = sum(xs) / SEG_LEN
            ym = sum(yp) / SEG_LEN
            xz = [v - xm for v in xs]
            yz = [v - ym for v in yp]
            xn = _norm(xz) + EPS
            yn = _norm(yz) + EPS
            total += sum(xz[k] * yz[k] for k in range(SEG_LEN)) / (xn * yn)
            count += 1
    return total / count
