"""
Acceptance Evaluation Script for doubleprobe

Runs the acceptance benchmark end to end:
- Metrization sandwich and chain-metric oracle on random quasimetrics
- Exact packing against exhaustive search
- Torus constructions, Cantor and log-line presets, report determinism
"""

import json
from datetime import datetime

from tests.evaluate import AcceptanceEvaluator


def main():
    """Main evaluation function"""
    print("="*80)
    print("Acceptance Evaluation - doubleprobe")
    print("="*80)

    print("\n[1/2] Initializing Evaluator...")
    evaluator = AcceptanceEvaluator()

    print("\n[2/2] Running Evaluation...")

    start_time = datetime.now()
    results = evaluator.evaluate()
    duration = (datetime.now() - start_time).total_seconds()

    summary = results["summary"]

    print("\n" + "="*80)
    print("Acceptance Results")
    print("="*80)

    print(f"\n Summary:")
    print(f"  • Cases Evaluated:  {summary['total_cases']}")
    print(f"  • Cases Passed:     {summary['passed']}")
    print(f"  • Total Duration:   {duration:.1f}s")

    print(f"\n Detailed Results:")
    for i, result in enumerate(results["detailed_results"], 1):
        budget = f" / budget {result['budget']:.0f}s" if result["budget"] is not None else ""
        print(f"\n  [{i}] {result['name']}")
        print(f"      Status: {'PASS' if result['passed'] else 'FAIL'}")
        print(f"      Time:   {result['seconds']:.2f}s{budget}")

    output_file = f"evaluation_results_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json"
    with open(output_file, 'w') as f:
        json.dump({
            "summary": summary,
            "detailed_results": results["detailed_results"],
            "evaluation_metadata": {
                "duration_seconds": duration,
                "timestamp": datetime.now().isoformat()
            }
        }, f, indent=2, default=str)

    print(f"\n Results saved to: {output_file}")

    print("\n" + "="*80)
    print("Evaluation Complete!")
    print("="*80)

    return 0 if summary["passed"] == summary["total_cases"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
