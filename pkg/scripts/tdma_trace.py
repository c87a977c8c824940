"""Min-area SNR over one TDMA cycle with 57 ms slots, both serving orders."""
from _common import run

if __name__ == "__main__":
    run("tdma_order_123", "simulate-tdma", "--ts-ms", "57", "--order", "1,2,3")
    run("tdma_order_132", "simulate-tdma", "--ts-ms", "57", "--order", "1,3,2")
