/** Page wiring: tabs, form submission, and click delegation for the
 * decision buttons. All behavior lives in the controllers. */

import { ApiClient } from "./api.js";
import { DecisionController, ProvenanceController, UploadController, Screen } from "./controller.js";

function screenFor(contentId: string, bannerId: string): Screen {
  const content = document.getElementById(contentId)!;
  const banner = document.getElementById(bannerId)!;
  return {
    setContent(html: string) {
      content.innerHTML = html;
    },
    setBanner(html: string) {
      banner.innerHTML = html;
    },
  };
}

function setButtonsDisabled(root: HTMLElement, disabled: boolean): void {
  root.querySelectorAll("button[data-action]").forEach((button) => {
    (button as HTMLButtonElement).disabled = disabled;
  });
}

export function start(): void {
  const api = new ApiClient("");
  const reviewPane = document.getElementById("review")!;
  const decisions = new DecisionController(api, screenFor("review-content", "review-banner"));
  const provenance = new ProvenanceController(
    api, screenFor("history-content", "history-banner"),
  );
  const uploads = new UploadController(api, screenFor("upload-content", "upload-banner"));

  document.querySelectorAll("nav button[data-tab]").forEach((button) => {
    button.addEventListener("click", () => {
      const tab = (button as HTMLElement).dataset.tab!;
      document.querySelectorAll("main > section").forEach((section) => {
        section.classList.toggle("active", section.id === tab);
      });
      if (tab === "review") {
        void decisions.refresh();
      }
    });
  });

  reviewPane.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("button[data-action]");
    if (!(button instanceof HTMLButtonElement) || decisions.busy) {
      return;
    }
    const action = button.dataset.action as "accept" | "reject";
    const ids = button.dataset.ids!.split(",").map(Number);
    setButtonsDisabled(reviewPane, true);
    void decisions.decide(action, ids).finally(() => {
      setButtonsDisabled(reviewPane, false);
    });
  });

  const historyForm = document.getElementById("history-form") as HTMLFormElement;
  historyForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(historyForm);
    void provenance.show(
      String(data.get("week")), String(data.get("dimension")),
      String(data.get("subcategory")),
    );
  });

  const uploadForm = document.getElementById("upload-form") as HTMLFormElement;
  uploadForm.addEventListener("submit", (event) => {
    event.preventDefault();
    if (uploads.busy) {
      return;
    }
    const data = new FormData(uploadForm);
    const file = data.get("file") as File | null;
    if (!file) {
      return;
    }
    const submit = uploadForm.querySelector("button[type=submit]") as HTMLButtonElement;
    submit.disabled = true;
    void uploads
      .submit(String(data.get("file_id")), String(data.get("release_date")), file)
      .finally(() => {
        submit.disabled = false;
      });
  });

  void decisions.refresh();
}

start();
