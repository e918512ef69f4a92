"""Count Cayley balls in the discrete Heisenberg group and fit their growth.

The group is generated by two unitriangular matrices; breadth-first
enumeration over exact integer matrices gives |B(m)| with no rounding.
The predicted polynomial degree from the lower central series is

    sum_k k * r_k = 1*2 + 2*1 = 4,

and the fitted log-log slope of the ball sizes should land close to it.
"""

from slowvol.group_growth import (
    BUILTIN_GENERATORS,
    ball_counts,
    bass_guivarch,
    malcev_lcs_ranks,
    slow_growth_exponent,
)


def main():
    gens = BUILTIN_GENERATORS["heisenberg"]()
    m_max = 20

    series = ball_counts(gens, m_max)
    print(f"|B(m)| for m = 0..{m_max}:")
    print("  " + " ".join(str(c) for c in series.counts))

    ranks = malcev_lcs_ranks(gens)
    degree = bass_guivarch(ranks)
    print(f"lower central series ranks: {ranks.ranks}")
    print(f"predicted growth degree:    {degree}")

    fit = slow_growth_exponent(series)
    print(f"fitted exponent:            {fit.exponent:.4f}  ({fit.classification})")


if __name__ == "__main__":
    main()
