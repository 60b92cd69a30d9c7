import matplotlib.pyplot as plt
import contactpy as cp

spec = cp.two_point(0.5, 2.0, 0.5)
times = [1, 2, 4, 8]
stream = cp.StreamId(42)

_, ax = plt.subplots()
for mode, color in ((cp.annealed(spec), cp.colors.blue),
                    (cp.quenched(cp.make_env(spec, 7)), cp.colors.red)):
    curve = cp.survival_curve(mode, [0], times, 200, stream)
    cp.plot_sweep(times, [e.estimate for e in curve], ax=ax,
                  label=mode.label, color=color)
ax.set_xlabel("T")
ax.set_ylabel("survival probability")
ax.legend()
