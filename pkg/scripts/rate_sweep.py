"""Effective rate against slot length for both designs."""
from _common import run

if __name__ == "__main__":
    run("rate_sweep", "rate-sweep", "--ts-ms", "1,2,3,5,7,10,15,20,30,57,100,200,500,1000,10000")
