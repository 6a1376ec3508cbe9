import csv, sys  # Reference detector: trace CSV in, per-sample model state CSV out.
B = {'heart_rate': (25, 250), 'spo2': (50, 100), 'temperature': (30, 45), 'systolic_bp': (60, 250), 'diastolic_bp': (30, 150), 'glucose': (20, 600)}
A, K, C, W, R, F, D, U = 100_000, 4_000, 5, 100, 5_000, 100_000, 10**6, 1_000  # U: micro-units per milliunit
def dr(n, d): q, r = divmod(abs(n), d); q += 2 * r >= d; return q if n >= 0 else -q
S, out = {}, csv.writer(sys.stdout, lineterminator='\n')
out.writerow(['device_id', 'vital_kind', 'index', 'ewma_mean', 'ewma_var', 'ref_mean_micro', 'ref_var', 'consecutive', 'status'])
for row in csv.DictReader(open(sys.argv[1])):
    key, x = (row['device_id'], row['vital_kind']), int(row['value_milli'])
    s = S.setdefault(key, dict(n=0, m=0, v=0, rm=0, rv=0, rn=0, c=0, f=False))
    lo, hi = B[row['vital_kind']]; shift = False
    if s['n'] == 0: s['m'], s['v'] = x, 0
    else:
        d = x - s['m']; s['m'] = dr((D - A) * s['m'] + A * x, D); s['v'] = dr((D - A) * s['v'] + A * d * d, D)
        shift = s['n'] > W and s['rn'] > 0 and ((s['m'] * U - s['rm'])**2 * (2 * D - A) > K * K * A * s['rv'] or s['v'] * D < F * s['rv'])
    if not lo * 1000 <= x <= hi * 1000 or shift: s['c'] += 1
    else:
        s['c'], n, xu = 0, s['rn'] + 1, x * U; d, v = xu - s['rm'], s['rv'] * U * U
        if n == 1: s['rm'], s['rv'] = xu, 0
        elif n * R <= D: s['rm'], s['rv'] = dr((n - 1) * s['rm'] + xu, n), dr((n - 1) * v + d * d, n * U * U)
        else: s['rm'], s['rv'] = dr((D - R) * s['rm'] + R * xu, D), dr((D - R) * v + R * d * d, D * U * U)
        s['rn'] = n
    s['f'] |= s['c'] >= C; s['n'] += 1
    status = 'flagged' if s['f'] else 'suspect' if s['c'] else 'healthy'
    out.writerow([*key, s['n'] - 1, s['m'], s['v'], s['rm'], s['rv'], s['c'], status])
