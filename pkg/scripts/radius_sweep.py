"""How does loop radius trade against depth? Sweep a few radii at 200 m depth."""
from rosb import radius_sweep

radii = [100.0, 200.0, 283.0, 400.0, 600.0]
for window in (30, 300):
    print(f"window {window}")
    for row in radius_sweep(200.0, radii, window=window, n_runs=100, seed=1):
        print(f"  R={row['radius_m']:6.1f} m  rmse {row['rmse_m']:.3f} m  "
              f"median {row['median_m']:.3f} m")
